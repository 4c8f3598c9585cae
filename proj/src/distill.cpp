#include "stdlab/distill.hpp"

#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "stdlab/checkpoint.hpp"
#include "stdlab/eval.hpp"

namespace stdlab {

namespace {

constexpr const char* kToolVersion = "0.1.0";

// rng substream ids
enum : uint64_t {
    kStreamData = 1,
    kStreamOmega = 2,
    kStreamNoise = 3,
    kStreamTargetS = 4,
    kStreamAdv = 5,
    kStreamBranch = 6,
    kStreamBank = 7,
    kStreamCdT = 8,
    kStreamWarmup = 9,
    kStreamEval = 10,
    kStreamStudentInit = 11,
    kStreamDiscInit = 12,
    kStreamResume = 13,
};

Tensor batch_tensor(const std::vector<Vec>& rows) {
    if (rows.empty()) throw std::invalid_argument("batch_tensor: empty batch");
    Tensor t(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != t.cols) throw std::invalid_argument("batch_tensor: ragged batch");
        std::memcpy(t.v.data() + i * t.cols, rows[i].data(), t.cols * sizeof(double));
    }
    return t;
}

std::vector<Vec> tensor_rows(const Tensor& t) {
    std::vector<Vec> rows(t.rows);
    for (size_t i = 0; i < t.rows; ++i) {
        rows[i].assign(t.v.begin() + static_cast<long>(i * t.cols),
                       t.v.begin() + static_cast<long>((i + 1) * t.cols));
    }
    return rows;
}

void hash_bytes(uint64_t& h, const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
    }
}

void hash_double(uint64_t& h, double x) { hash_bytes(h, &x, sizeof(x)); }
void hash_i64(uint64_t& h, int64_t x) { hash_bytes(h, &x, sizeof(x)); }

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

}  // namespace

uint64_t RunReport::deterministic_hash() const {
    uint64_t h = 1469598103934665603ULL;
    for (double w : warmup_losses) hash_double(h, w);
    for (const auto& r : records) {
        hash_i64(h, r.iteration);
        hash_double(h, r.l_std);
        hash_double(h, r.l_adv_g);
        hash_double(h, r.l_adv_d);
        hash_i64(h, r.teacher_solver_calls);
        hash_i64(h, r.bank_occupancy);
    }
    for (const auto& s : snapshots) {
        hash_i64(h, s.iteration);
        hash_double(h, s.consistency_gap);
        hash_double(h, s.sw_distance);
    }
    return h;
}

RngBundle::RngBundle(uint64_t master)
    : data(derive_seed(master, kStreamData)),
      omega(derive_seed(master, kStreamOmega)),
      noise(derive_seed(master, kStreamNoise)),
      target_s(derive_seed(master, kStreamTargetS)),
      adv(derive_seed(master, kStreamAdv)),
      branch(derive_seed(master, kStreamBranch)),
      bank(derive_seed(master, kStreamBank)),
      cd_t(derive_seed(master, kStreamCdT)),
      warmup(derive_seed(master, kStreamWarmup)),
      eval(derive_seed(master, kStreamEval)) {}

int sample_target_s(int t, double gamma, const StepGrid& grid, Rng& rng) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("sample_target_s: gamma in [0,1]");
    const double raw = (1.0 - gamma) * t + rng.uniform() * gamma * t;
    // grid is descending and ends at 0, so a snap target always exists
    for (int ts : grid.timesteps) {
        if (static_cast<double>(ts) <= raw) return ts;
    }
    return 0;
}

int draw_r(RRule rule, int s, const StepGrid& grid, Rng& rng) {
    switch (rule) {
        case RRule::EqualS:
            return s;
        case RRule::Zero:
            return 0;
        case RRule::BelowS: {
            std::vector<int> cands;
            for (int ts : grid.timesteps) {
                if (ts < s) cands.push_back(ts);
            }
            if (cands.empty()) return 0;
            return cands[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(cands.size()) - 1))];
        }
        default: {  // AboveS
            std::vector<int> cands;
            for (int ts : grid.timesteps) {
                if (ts > s) cands.push_back(ts);
            }
            if (cands.empty()) return s;
            return cands[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(cands.size()) - 1))];
        }
    }
}

double std_loss_value(const StudentNet& student, const StudentNet& target_net, const Vec& x_in,
                      int t_in, const Vec& x_teacher, int t_n, int s, const Condition& cond,
                      const NoiseSchedule& schedule) {
    if (!(t_in >= t_n && t_n >= s)) throw std::invalid_argument("std_loss: need t_in >= t_n >= s");
    Vec a = consistency_fn(student, x_in, t_in, s, cond, schedule);
    Vec b = consistency_fn(target_net, x_teacher, t_n, s, cond, schedule);
    double loss = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        loss += d * d;
    }
    return loss;
}

AdvLossValues adv_loss_values(const Discriminator& disc, const FeatureMap& fmap,
                              const std::vector<Vec>& fakes, const std::vector<Vec>& reals_noised) {
    if (fakes.empty() || reals_noised.empty()) {
        throw std::invalid_argument("adv_loss_values: empty batch");
    }
    AdvLossValues out;
    for (const auto& f : fakes) {
        const double d = disc.forward(fmap.apply(f));
        out.l_g += -d;
        out.l_d += std::max(0.0, 1.0 + d);
    }
    out.l_g /= static_cast<double>(fakes.size());
    out.l_d /= static_cast<double>(fakes.size());
    double real_term = 0.0;
    for (const auto& r : reals_noised) {
        real_term += std::max(0.0, 1.0 - disc.forward(fmap.apply(r)));
    }
    out.l_d += real_term / static_cast<double>(reals_noised.size());
    return out;
}

int TrainState::grid_index_of(int timestep) const {
    for (size_t i = 0; i < grid.timesteps.size(); ++i) {
        if (grid.timesteps[i] == timestep) return static_cast<int>(i);
    }
    throw std::logic_error("TrainState: timestep " + std::to_string(timestep) + " not on the grid");
}

std::pair<Vec, Condition> TrainState::draw_data() {
    if (!dataset.points.empty()) {
        const int idx = rngs.data.uniform_int(0, static_cast<int>(dataset.size()) - 1);
        return {dataset.points[static_cast<size_t>(idx)],
                Condition::class_label(dataset.labels[static_cast<size_t>(idx)])};
    }
    return gmm_sample(cfg.gmm, Condition::null_cond(), rngs.data);
}

TrainState make_train_state(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    cfg.finalize();
    const uint64_t master = cfg.distill.seed;

    NoiseSchedule schedule = build_schedule(cfg.schedule.kind, cfg.schedule.total_steps);
    const int tau = tau_eta(schedule, cfg.distill.eta);
    StepGrid grid = uniform_grid(schedule, tau, cfg.distill.ode_steps);

    auto base = std::make_shared<AnalyticTeacher>(cfg.gmm, schedule);
    std::shared_ptr<const NoisePredictor> teacher = base;
    if (cfg.teacher.delta > 0.0) {
        teacher = std::make_shared<PerturbedTeacher>(base, cfg.teacher.delta, cfg.teacher.field,
                                                     cfg.teacher.seed, schedule.total_steps);
    }

    TrainState st{
        cfg,
        schedule,
        grid,
        tau,
        teacher,
        FeatureMap(cfg.features.kind, cfg.gmm.dim(), cfg.features.out_dim, cfg.features.seed),
        StudentNet(cfg.student, derive_seed(master, kStreamStudentInit)),
        StudentNet(cfg.student, derive_seed(master, kStreamStudentInit)),  // target starts equal
        Discriminator(cfg.disc, derive_seed(master, kStreamDiscInit)),
        AdamState{},
        AdamState{},
        TrajectoryBank(cfg.distill.bank_capacity * cfg.distill.batch_size),
        RngBundle(master),
        Dataset{},
        SolverCounter{},
        0,
        0,
        {},
        {},
        {},
        0.0,
    };
    st.adam_student = make_adam_state(st.student.params());
    st.adam_disc = make_adam_state(st.disc.params());
    if (!cfg.data_path.empty()) {
        st.dataset = read_dataset(cfg.data_path);
        if (st.dataset.dim() != cfg.gmm.dim()) {
            throw std::invalid_argument("dataset dimension does not match the gmm spec");
        }
    }
    return st;
}

namespace {

struct Members {
    std::vector<Vec> x0, x_in;
    std::vector<Condition> conds;
    std::vector<int> t_in, t_next, s, slots;
    std::vector<double> omegas;
    bool from_bank = false;

    size_t size() const { return x0.size(); }
};

void draw_target_steps(TrainState& st, Members& m) {
    const double gamma = st.cfg.distill.gamma;
    m.s.resize(m.size());
    for (size_t i = 0; i < m.size(); ++i) {
        int s = sample_target_s(m.t_in[i], gamma, st.grid, st.rngs.target_s);
        m.s[i] = std::min(s, m.t_next[i]);  // theta-minus jump needs s <= t_n
    }
}

Members assemble_std(TrainState& st) {
    Members m;
    const auto& d = st.cfg.distill;
    const int batch = d.batch_size;
    const double omega_iter = st.rngs.omega.uniform(d.omega_min, d.omega_max);
    const bool branch_draw = st.rngs.branch.uniform() < d.rho;
    m.from_bank = branch_draw && !st.bank.empty();

    st.last_data_x0.clear();
    for (int i = 0; i < batch; ++i) {
        // the data pair is drawn every iteration; the bank branch replaces it
        auto [x0_draw, cond_draw] = st.draw_data();
        st.last_data_x0.push_back(x0_draw);
        if (m.from_bank) {
            auto [slot, entry] = st.bank.sample(st.rngs.bank);
            m.x0.push_back(entry.x0);
            m.conds.push_back(entry.cond);
            m.x_in.push_back(entry.state);
            m.t_in.push_back(entry.t);
            m.slots.push_back(slot);
            m.omegas.push_back(d.fixed_omega_per_trajectory ? entry.omega : omega_iter);
        } else {
            Vec eps = st.rngs.noise.normal_vec(x0_draw.size());
            m.x_in.push_back(perturb(x0_draw, st.tau, eps, st.schedule));
            m.x0.push_back(std::move(x0_draw));
            m.conds.push_back(cond_draw);
            m.t_in.push_back(st.tau);
            m.slots.push_back(-1);
            m.omegas.push_back(omega_iter);
        }
        const int gi = st.grid_index_of(m.t_in.back());
        m.t_next.push_back(st.grid.timesteps[static_cast<size_t>(gi) + 1]);
    }
    draw_target_steps(st, m);
    st.last_x0 = m.x0;
    st.last_x_in = m.x_in;
    st.last_omega = omega_iter;
    return m;
}

Members assemble_cd(TrainState& st) {
    Members m;
    const auto& d = st.cfg.distill;
    const int batch = d.batch_size;
    const double omega_iter = st.rngs.omega.uniform(d.omega_min, d.omega_max);

    st.last_data_x0.clear();
    for (int i = 0; i < batch; ++i) {
        auto [x0, cond] = st.draw_data();
        st.last_data_x0.push_back(x0);
        Vec eps = st.rngs.noise.normal_vec(x0.size());
        const int gi = st.rngs.cd_t.uniform_int(0, st.grid.count() - 1);
        const int t = st.grid.timesteps[static_cast<size_t>(gi)];
        m.x_in.push_back(perturb(x0, t, eps, st.schedule));
        m.x0.push_back(std::move(x0));
        m.conds.push_back(cond);
        m.t_in.push_back(t);
        m.t_next.push_back(st.grid.timesteps[static_cast<size_t>(gi) + 1]);
        m.slots.push_back(-1);
        m.omegas.push_back(omega_iter);
    }
    draw_target_steps(st, m);
    st.last_x0 = m.x0;
    st.last_x_in = m.x_in;
    st.last_omega = omega_iter;
    return m;
}

// bench arm: fresh batched rollout from tau to a uniformly random grid depth
Members assemble_fresh_rollout(TrainState& st) {
    Members m;
    const auto& d = st.cfg.distill;
    const int batch = d.batch_size;
    const double omega_iter = st.rngs.omega.uniform(d.omega_min, d.omega_max);
    const int depth = st.rngs.cd_t.uniform_int(0, st.grid.count() - 1);

    for (int i = 0; i < batch; ++i) {
        auto [x0, cond] = st.draw_data();
        Vec eps = st.rngs.noise.normal_vec(x0.size());
        m.x_in.push_back(perturb(x0, st.tau, eps, st.schedule));
        m.x0.push_back(std::move(x0));
        m.conds.push_back(cond);
        m.slots.push_back(-1);
        m.omegas.push_back(omega_iter);
    }
    for (int k = 0; k < depth; ++k) {
        std::vector<int> tk(m.x_in.size(), st.grid.timesteps[static_cast<size_t>(k)]);
        std::vector<int> tk1(m.x_in.size(), st.grid.timesteps[static_cast<size_t>(k) + 1]);
        m.x_in = teacher_cfg_step(*st.teacher, m.x_in, tk, tk1, m.conds, m.omegas, st.schedule,
                                  &st.counter);
    }
    const int t = st.grid.timesteps[static_cast<size_t>(depth)];
    m.t_in.assign(m.x_in.size(), t);
    m.t_next.assign(m.x_in.size(), st.grid.timesteps[static_cast<size_t>(depth) + 1]);
    draw_target_steps(st, m);
    st.last_x0 = m.x0;
    st.last_x_in = m.x_in;
    st.last_omega = omega_iter;
    return m;
}

// linear decay from lr to lr * lr_decay across the main loop
double decayed_lr(const TrainState& st, double lr) {
    const auto& d = st.cfg.distill;
    if (d.iterations <= 1) return lr;
    const double progress = static_cast<double>(st.iterations_done) /
                            static_cast<double>(d.iterations - 1);
    const double clamped = std::min(1.0, std::max(0.0, progress));
    return lr * (1.0 - (1.0 - d.lr_decay) * clamped);
}

// consistency + adversarial losses, one optimizer step each for theta and psi
IterationRecord losses_and_updates(TrainState& st, const Members& m, const std::vector<Vec>& x_teach) {
    const auto& d = st.cfg.distill;
    const size_t batch = m.size();
    const double inv_b = 1.0 / static_cast<double>(batch);
    const double T = static_cast<double>(st.schedule.total_steps);

    std::vector<double> tn_in(batch), tn_next(batch), sn(batch);
    for (size_t i = 0; i < batch; ++i) {
        tn_in[i] = m.t_in[i] / T;
        tn_next[i] = m.t_next[i] / T;
        sn[i] = m.s[i] / T;
    }

    // theta-minus branch, evaluated without gradient recording
    Tensor x_teach_t = batch_tensor(x_teach);
    Tensor targets;
    {
        Graph tg;
        int eps_minus = st.target.build_forward(tg, x_teach_t, tn_next, sn, m.conds, false);
        int f_minus = build_consistency_jump(tg, tg.constant(x_teach_t), eps_minus, m.t_next, m.s,
                                             st.schedule);
        targets = tg.value(f_minus);
    }

    // theta branch: L_STD + lambda * L_G in one graph, psi held constant
    Graph g;
    Tensor x_in_t = batch_tensor(m.x_in);
    int eps_hat = st.student.build_forward(g, x_in_t, tn_in, sn, m.conds, true);
    int f_theta = build_consistency_jump(g, g.constant(x_in_t), eps_hat, m.t_in, m.s, st.schedule);
    int diff = g.sub(f_theta, g.constant(targets));
    int l_std = g.scale(g.sum_all(g.mul(diff, diff)), inv_b);
    int feat = build_feature_map(g, st.fmap, f_theta);
    int d_fake_live = st.disc.build_forward(g, feat, false);
    int l_gen = g.scale(g.sum_all(d_fake_live), -inv_b);
    int loss = g.add(l_std, g.scale(l_gen, d.lambda_adv));

    IterationRecord rec;
    rec.l_std = g.scalar(l_std);
    rec.l_adv_g = g.scalar(l_gen);
    if (!std::isfinite(rec.l_std) || !std::isfinite(rec.l_adv_g)) {
        throw std::runtime_error("train_iteration: non-finite loss at iteration " +
                                 std::to_string(st.iterations_done + 1));
    }
    Tensor fake_values = g.value(f_theta);  // detached copy for the discriminator update

    g.backward(loss);
    ParamStore sgrads = g.grads_for(st.student.params());
    adam_step(st.student.params(), sgrads, st.adam_student, decayed_lr(st, d.lr_student));
    ema_update(st.target.params(), st.student.params(), d.ema_mu);

    // discriminator update on detached fakes and freshly noised reals
    std::vector<Vec> reals(batch);
    for (size_t i = 0; i < batch; ++i) {
        const int r = draw_r(d.r_rule, m.s[i], st.grid, st.rngs.adv);
        Vec eps = st.rngs.adv.normal_vec(m.x0[i].size());
        reals[i] = perturb(m.x0[i], r, eps, st.schedule);
    }
    Graph dg;
    int fake_feat = build_feature_map(dg, st.fmap, dg.constant(std::move(fake_values)));
    int d_fake = st.disc.build_forward(dg, fake_feat, true);
    int real_feat = build_feature_map(dg, st.fmap, dg.constant(batch_tensor(reals)));
    int d_real = st.disc.build_forward(dg, real_feat, true);
    int l_disc = dg.add(dg.scale(dg.sum_all(dg.relu(dg.add_scalar(d_fake, 1.0))), inv_b),
                        dg.scale(dg.sum_all(dg.relu(dg.add_scalar(dg.scale(d_real, -1.0), 1.0))), inv_b));
    rec.l_adv_d = dg.scalar(l_disc);
    if (!std::isfinite(rec.l_adv_d)) {
        throw std::runtime_error("train_iteration: non-finite discriminator loss at iteration " +
                                 std::to_string(st.iterations_done + 1));
    }
    dg.backward(l_disc);
    ParamStore dgrads = dg.grads_for(st.disc.params());
    adam_step(st.disc.params(), dgrads, st.adam_disc, decayed_lr(st, d.lr_disc));
    return rec;
}

void apply_bank_updates(TrainState& st, const Members& m, const std::vector<Vec>& x_teach) {
    if (m.from_bank) {
        // members may share entries; each distinct drawn entry advances exactly once
        std::vector<bool> done(static_cast<size_t>(st.bank.capacity()), false);
        for (size_t i = 0; i < m.size(); ++i) {
            const int slot = m.slots[i];
            if (done[static_cast<size_t>(slot)]) continue;
            done[static_cast<size_t>(slot)] = true;
            st.bank.commit(slot, x_teach[i], m.t_next[i]);
        }
        return;
    }
    for (size_t i = 0; i < m.size(); ++i) {
        if (m.t_next[i] <= 0) break;  // one-step grids finish immediately, nothing to store
        auto slot = st.bank.try_reserve();
        if (!slot) break;
        st.bank.place(*slot, BankEntry{m.x0[i], x_teach[i], m.conds[i], m.t_next[i], m.omegas[i]});
    }
}

IterationRecord run_iteration(TrainState& st, Members m, bool with_bank) {
    const auto start = std::chrono::steady_clock::now();
    const int64_t steps_before = st.counter.solver_steps;

    std::vector<Vec> x_teach = teacher_cfg_step(*st.teacher, m.x_in, m.t_in, m.t_next, m.conds,
                                                m.omegas, st.schedule, &st.counter);
    IterationRecord rec = losses_and_updates(st, m, x_teach);
    if (with_bank) apply_bank_updates(st, m, x_teach);

    st.iterations_done += 1;
    rec.iteration = st.iterations_done;
    rec.teacher_solver_calls = st.counter.solver_steps - steps_before;
    rec.bank_occupancy = st.bank.occupancy() / st.cfg.distill.batch_size;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace

IterationRecord train_iteration(TrainState& st) {
    if (st.cfg.distill.mode == RunMode::BaselineCd) {
        return run_iteration(st, assemble_cd(st), false);
    }
    return run_iteration(st, assemble_std(st), true);
}

IterationRecord no_bank_iteration(TrainState& st) {
    return run_iteration(st, assemble_fresh_rollout(st), false);
}

double warmup_iteration(TrainState& st) {
    const auto& d = st.cfg.distill;
    const size_t batch = static_cast<size_t>(d.batch_size);
    const double T = static_cast<double>(st.schedule.total_steps);

    std::vector<Vec> x_t(batch), target_eps(batch);
    std::vector<Condition> conds(batch);
    std::vector<double> tn(batch), sn(batch);
    std::vector<int> ts(batch), ss(batch);
    for (size_t i = 0; i < batch; ++i) {
        auto [x0, cond] = st.draw_data();
        const int gi = st.rngs.warmup.uniform_int(0, st.grid.count() - 1);
        const int gj = st.rngs.warmup.uniform_int(gi, st.grid.count());
        const int t = st.grid.timesteps[static_cast<size_t>(gi)];
        const int s = st.grid.timesteps[static_cast<size_t>(gj)];
        Vec eps = st.rngs.noise.normal_vec(x0.size());
        x_t[i] = perturb(x0, t, eps, st.schedule);
        target_eps[i] = st.teacher->eps(x_t[i], t, s, cond);
        conds[i] = cond;
        ts[i] = t;
        ss[i] = s;
        tn[i] = t / T;
        sn[i] = s / T;
    }

    Graph g;
    int eps_hat = st.student.build_forward(g, batch_tensor(x_t), tn, sn, conds, true);
    int diff = g.sub(eps_hat, g.constant(batch_tensor(target_eps)));
    int loss = g.scale(g.sum_all(g.mul(diff, diff)), 1.0 / static_cast<double>(batch));
    const double loss_v = g.scalar(loss);
    if (!std::isfinite(loss_v)) {
        throw std::runtime_error("warmup_iteration: non-finite loss at iteration " +
                                 std::to_string(st.warmup_done + 1));
    }
    g.backward(loss);
    adam_step(st.student.params(), g.grads_for(st.student.params()), st.adam_student,
              st.cfg.distill.lr_student);
    st.warmup_done += 1;
    return loss_v;
}

void save_train_checkpoint(const TrainState& st, const std::string& path) {
    std::vector<std::pair<std::string, const ParamStore*>> stores = {
        {"theta", &st.student.params()},
        {"theta_minus", &st.target.params()},
        {"psi", &st.disc.params()},
        {"adam_theta_m", &st.adam_student.m},
        {"adam_theta_v", &st.adam_student.v},
        {"adam_psi_m", &st.adam_disc.m},
        {"adam_psi_v", &st.adam_disc.v},
    };
    std::map<std::string, double> scalars = {
        {"adam_psi_step", static_cast<double>(st.adam_disc.step)},
        {"adam_theta_step", static_cast<double>(st.adam_student.step)},
        {"iterations_done", static_cast<double>(st.iterations_done)},
        {"schedule_total_steps", static_cast<double>(st.schedule.total_steps)},
        {"warmup_done", static_cast<double>(st.warmup_done)},
    };
    std::map<std::string, std::string> text = {
        {"config", serialize_config(st.cfg)},
        {"schedule_kind", schedule_kind_to_string(st.schedule.kind)},
    };
    save_checkpoint(path, stores, scalars, text);
}

TrainState load_train_state(const std::string& checkpoint_path) {
    LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
    auto cfg_it = ck.text.find("config");
    if (cfg_it == ck.text.end()) throw std::runtime_error("checkpoint: missing embedded config");
    RunConfig cfg = parse_config_text(cfg_it->second);

    TrainState st = make_train_state(cfg);
    st.student.params() = ck.store("theta");
    st.target.params() = ck.store("theta_minus");
    st.disc.params() = ck.store("psi");
    st.adam_student.m = ck.store("adam_theta_m");
    st.adam_student.v = ck.store("adam_theta_v");
    st.adam_disc.m = ck.store("adam_psi_m");
    st.adam_disc.v = ck.store("adam_psi_v");
    st.adam_student.step = static_cast<int64_t>(ck.scalars.at("adam_theta_step"));
    st.adam_disc.step = static_cast<int64_t>(ck.scalars.at("adam_psi_step"));
    st.iterations_done = static_cast<int64_t>(ck.scalars.at("iterations_done"));
    st.warmup_done = static_cast<int64_t>(ck.scalars.at("warmup_done"));
    if (st.iterations_done > 0) {
        // fresh substreams for the continuation rather than a replay of the originals
        st.rngs = RngBundle(derive_seed(cfg.distill.seed,
                                        kStreamResume + static_cast<uint64_t>(st.iterations_done)));
    }
    return st;
}

namespace {

EvalSnapshot take_snapshot(TrainState& st, int64_t iteration) {
    const auto& ev = st.cfg.eval;
    int nfe = ev.nfe.empty() ? 4 : ev.nfe.front();
    for (int n : ev.nfe) {
        if (n == 4) nfe = 4;
    }
    EvalSnapshot snap;
    snap.iteration = iteration;
    snap.consistency_gap = consistency_gap(student_jump(st.student, st.schedule), *st.teacher,
                                           st.cfg.gmm, st.cfg.distill.eta, st.schedule, st.grid, 64,
                                           4, ev.omega_eval, st.rngs.eval);
    auto teacher_ends = teacher_endpoints(*st.teacher, st.cfg.gmm, st.cfg.distill.eta, st.grid,
                                          ev.eval_samples, ev.omega_eval, st.schedule, st.rngs.eval);
    auto student_ends = sample_endpoints(student_jump(st.student, st.schedule), st.cfg.gmm,
                                         st.cfg.distill.eta, nfe, st.schedule, ev.eval_samples,
                                         st.rngs.eval);
    snap.sw_distance = sliced_wasserstein(student_ends, teacher_ends, ev.sw_projections, st.rngs.eval);
    return snap;
}

void write_metrics_csv(const RunReport& report, const std::string& path) {
    CsvWriter w(path);
    w.header({"iteration", "l_std", "l_adv_g", "l_adv_d", "teacher_solver_calls", "bank_occupancy",
              "wall_ms"});
    for (const auto& r : report.records) {
        w.begin_row();
        w.field(r.iteration);
        w.field(r.l_std);
        w.field(r.l_adv_g);
        w.field(r.l_adv_d);
        w.field(r.teacher_solver_calls);
        w.field(static_cast<int64_t>(r.bank_occupancy));
        w.field(r.wall_ms);
        w.end_row();
    }
}

void write_snapshots_csv(const RunReport& report, const std::string& path) {
    CsvWriter w(path);
    w.header({"iteration", "consistency_gap", "sw_distance"});
    for (const auto& s : report.snapshots) {
        w.begin_row();
        w.field(s.iteration);
        w.field(s.consistency_gap);
        w.field(s.sw_distance);
        w.end_row();
    }
}

void write_warmup_csv(const RunReport& report, const std::string& path) {
    CsvWriter w(path);
    w.header({"iteration", "warmup_loss"});
    for (size_t i = 0; i < report.warmup_losses.size(); ++i) {
        w.begin_row();
        w.field(static_cast<int64_t>(i + 1));
        w.field(report.warmup_losses[i]);
        w.end_row();
    }
}

}  // namespace

RunReport run_distillation(TrainState& st, const std::string& run_dir, RunPaths* paths_out) {
    namespace fs = std::filesystem;
    const bool with_artifacts = !run_dir.empty();
    RunPaths paths;
    paths.run_dir = run_dir;
    const std::string started_at = iso_now();
    const auto run_start = std::chrono::steady_clock::now();

    if (with_artifacts) {
        fs::create_directories(run_dir);
        paths.config_file = run_dir + "/config.cfg";
        paths.checkpoint = run_dir + "/checkpoint.stdl";
        paths.metrics_csv = run_dir + "/metrics.csv";
        paths.snapshots_csv = run_dir + "/eval_snapshots.csv";
        paths.warmup_csv = run_dir + "/warmup.csv";
        paths.manifest = run_dir + "/manifest.json";
        std::ofstream cf(paths.config_file);
        cf << serialize_config(st.cfg);
    }

    RunReport report;
    const auto& d = st.cfg.distill;

    auto diagnostic_dump = [&](const char* why) {
        if (!with_artifacts) return;
        save_train_checkpoint(st, run_dir + "/diagnostic.stdl");
        std::ofstream note(run_dir + "/diagnostic.txt");
        note << why << "\n";
    };

    try {
        if (st.warmup_done < d.warmup_iterations) {
            while (st.warmup_done < d.warmup_iterations) {
                report.warmup_losses.push_back(warmup_iteration(st));
            }
            st.target.params() = st.student.params();  // theta_minus starts from the warmed-up theta
        }

        report.snapshots.push_back(take_snapshot(st, st.iterations_done));
        while (st.iterations_done < d.iterations) {
            report.records.push_back(train_iteration(st));
            const int64_t i = st.iterations_done;
            if (st.cfg.eval.eval_every > 0 && i < d.iterations && i % st.cfg.eval.eval_every == 0) {
                report.snapshots.push_back(take_snapshot(st, i));
            }
            if (with_artifacts && st.cfg.eval.checkpoint_every > 0 &&
                i % st.cfg.eval.checkpoint_every == 0) {
                save_train_checkpoint(st, run_dir + "/checkpoint_iter" + std::to_string(i) + ".stdl");
            }
        }
        if (st.iterations_done > 0 || d.iterations == 0) {
            report.snapshots.push_back(take_snapshot(st, st.iterations_done));
        }
    } catch (const std::exception& e) {
        diagnostic_dump(e.what());
        throw;
    }

    if (with_artifacts) {
        save_train_checkpoint(st, paths.checkpoint);
        write_metrics_csv(report, paths.metrics_csv);
        write_snapshots_csv(report, paths.snapshots_csv);
        write_warmup_csv(report, paths.warmup_csv);

        nlohmann::json manifest;
        manifest["tool_version"] = kToolVersion;
        manifest["seed"] = st.cfg.distill.seed;
        manifest["mode"] = run_mode_to_string(st.cfg.distill.mode);
        manifest["started_at"] = started_at;
        manifest["finished_at"] = iso_now();
        manifest["runtime_sec"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
        manifest["iterations_done"] = st.iterations_done;
        manifest["config"] = serialize_config(st.cfg);
        manifest["artifacts"] = {
            {"checkpoint", "checkpoint.stdl"}, {"metrics", "metrics.csv"},
            {"snapshots", "eval_snapshots.csv"}, {"warmup", "warmup.csv"},
            {"config", "config.cfg"},
        };
        // atomic: write to a temp name, then rename
        const std::string tmp = paths.manifest + ".tmp";
        {
            std::ofstream mf(tmp);
            mf << manifest.dump(2) << "\n";
        }
        fs::rename(tmp, paths.manifest);
    }
    if (paths_out) *paths_out = paths;
    return report;
}

}  // namespace stdlab
