#include "stdlab/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace stdlab {

double sliced_wasserstein(const std::vector<Vec>& a, const std::vector<Vec>& b, int projections,
                          Rng& rng) {
    if (a.size() != b.size()) throw std::invalid_argument("sliced_wasserstein: |A| != |B|");
    if (a.empty()) throw std::invalid_argument("sliced_wasserstein: empty sets");
    const size_t n = a.size();
    const size_t d = a[0].size();
    std::vector<double> pa(n), pb(n);
    double total = 0.0;
    for (int p = 0; p < projections; ++p) {
        Vec dir = rng.normal_vec(d);
        double norm = l2_norm(dir);
        if (norm == 0.0) norm = 1.0;
        for (auto& x : dir) x /= norm;
        for (size_t i = 0; i < n; ++i) {
            double sa = 0.0, sb = 0.0;
            for (size_t j = 0; j < d; ++j) {
                sa += dir[j] * a[i][j];
                sb += dir[j] * b[i][j];
            }
            pa[i] = sa;
            pb[i] = sb;
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        double msq = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double diff = pa[i] - pb[i];
            msq += diff * diff;
        }
        total += std::sqrt(msq / static_cast<double>(n));
    }
    return total / static_cast<double>(projections);
}

void standard_theorem_sweep(const NoiseSchedule& schedule, std::vector<int>& t_values,
                            std::vector<int>& s_candidates) {
    const int T = schedule.total_steps;
    t_values.clear();
    for (int k = 1; k <= 9; ++k) t_values.push_back(static_cast<int>(std::llround(0.1 * k * T)));
    const int top = t_values.back();
    StepGrid g = uniform_grid(schedule, top, std::min(45, top));
    s_candidates = g.timesteps;
}

TheoremReport verify_theorem(const std::vector<double>& deltas, const NoiseSchedule& schedule,
                             const std::vector<int>& t_values, const std::vector<int>& s_candidates,
                             int trials, int dim, uint64_t seed, double tolerance) {
    TheoremReport report;
    report.tolerance = tolerance;

    for (int t : t_values) {
        for (int s : s_candidates) {
            if (s >= t) continue;
            std::vector<TheoremRow> rows(deltas.size());
            for (size_t di = 0; di < deltas.size(); ++di) {
                rows[di].delta = deltas[di];
                rows[di].t = t;
                rows[di].s = s;
                rows[di].abar_t = schedule.abar(t);
                rows[di].abar_s = schedule.abar(s);
                rows[di].c_ts = c_coefficient(t, s, schedule);
                rows[di].min_residual_norm = 1e300;
            }
            Rng rng(derive_seed(seed, (static_cast<uint64_t>(t) << 20) ^ static_cast<uint64_t>(s)));
            for (int trial = 0; trial < trials; ++trial) {
                Vec x0 = rng.normal_vec(static_cast<size_t>(dim));
                Vec eps = rng.normal_vec(static_cast<size_t>(dim));
                // scale the trial across every delta with the same coupling
                for (size_t di = 0; di < deltas.size(); ++di) {
                    Vec eps_phi = eps;
                    eps_phi[0] += deltas[di];  // constant unit field on the first coordinate
                    FixedEpsPredictor teacher(eps_phi);
                    ResidualPair rp = one_step_residual(x0, eps, t, s, teacher, schedule);
                    double err = 0.0;
                    for (size_t j = 0; j < rp.residual.size(); ++j) {
                        err = std::max(err, std::fabs(rp.residual[j] - rp.predicted[j]));
                    }
                    const double norm = l2_norm(rp.residual);
                    rows[di].max_identity_err = std::max(rows[di].max_identity_err, err);
                    rows[di].max_residual_norm = std::max(rows[di].max_residual_norm, norm);
                    rows[di].min_residual_norm = std::min(rows[di].min_residual_norm, norm);
                }
            }
            for (auto& r : rows) {
                report.max_identity_err = std::max(report.max_identity_err, r.max_identity_err);
                report.rows.push_back(r);
            }
        }
    }
    report.pass = report.max_identity_err <= tolerance;
    return report;
}

double consistency_gap(const JumpFn& jump, const NoisePredictor& teacher, const GmmSpec& gmm,
                       double eta, const NoiseSchedule& schedule, const StepGrid& grid,
                       int n_trajectories, int pairs_per_trajectory, double omega_eval, Rng& rng) {
    const int tau = tau_eta(schedule, eta);
    if (grid.tau() != tau) throw std::invalid_argument("consistency_gap: grid does not start at tau_eta");
    double total = 0.0;
    int64_t count = 0;
    const int n_positions = static_cast<int>(grid.timesteps.size());
    for (int k = 0; k < n_trajectories; ++k) {
        auto [x0, cond] = gmm_sample(gmm, Condition::null_cond(), rng);
        Vec eps = rng.normal_vec(x0.size());
        Vec x_tau = perturb(x0, tau, eps, schedule);
        Trajectory traj = rollout(teacher, x_tau, grid, cond, omega_eval, schedule);
        for (int p = 0; p < pairs_per_trajectory; ++p) {
            int i = rng.uniform_int(0, n_positions - 2);
            int j = rng.uniform_int(i + 1, n_positions - 1);
            const auto& [t_hi, x_hi] = traj.states[static_cast<size_t>(i)];
            const auto& [t_lo, x_lo] = traj.states[static_cast<size_t>(j)];
            Vec f_hi = jump(x_hi, t_hi, 0, cond);
            Vec f_lo = jump(x_lo, t_lo, 0, cond);
            double sq = 0.0;
            for (size_t c = 0; c < f_hi.size(); ++c) {
                const double diff = f_hi[c] - f_lo[c];
                sq += diff * diff;
            }
            total += std::sqrt(sq);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

JumpFn student_jump(const StudentNet& student, const NoiseSchedule& schedule) {
    return [&student, &schedule](const Vec& x, int t, int s, const Condition& cond) {
        return consistency_fn(student, x, t, s, cond, schedule);
    };
}

JumpFn teacher_jump(const NoisePredictor& teacher, const NoiseSchedule& schedule) {
    return [&teacher, &schedule](const Vec& x, int t, int s, const Condition& cond) {
        if (s == t) return x;
        return ddim_step(x, t, s, teacher.eps(x, t, s, cond), schedule);
    };
}

std::vector<Vec> sample_endpoints(const JumpFn& jump, const GmmSpec& gmm, double eta, int nfe,
                                  const NoiseSchedule& schedule, int n, Rng& rng) {
    const int tau = tau_eta(schedule, eta);
    StepGrid grid = uniform_grid(schedule, tau, nfe);
    std::vector<Vec> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto [x0, cond] = gmm_sample(gmm, Condition::null_cond(), rng);
        Vec eps = rng.normal_vec(x0.size());
        Vec x = perturb(x0, tau, eps, schedule);
        for (size_t k = 0; k + 1 < grid.timesteps.size(); ++k) {
            x = jump(x, grid.timesteps[k], grid.timesteps[k + 1], cond);
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<Vec> teacher_endpoints(const NoisePredictor& teacher, const GmmSpec& gmm, double eta,
                                   const StepGrid& grid, int n, double omega,
                                   const NoiseSchedule& schedule, Rng& rng, SolverCounter* counter) {
    const int tau = tau_eta(schedule, eta);
    std::vector<Vec> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto [x0, cond] = gmm_sample(gmm, Condition::null_cond(), rng);
        Vec eps = rng.normal_vec(x0.size());
        Vec x = perturb(x0, tau, eps, schedule);
        Trajectory traj = rollout(teacher, x, grid, cond, omega, schedule, counter);
        out.push_back(traj.endpoint());
    }
    return out;
}

EndpointReport endpoint_eval(const JumpFn& jump, const NoisePredictor& teacher,
                             const GmmSpec& gmm, double eta, const std::vector<int>& nfes, int n,
                             const NoiseSchedule& schedule, const StepGrid& grid, double omega_eval,
                             int sw_projections, Rng& rng) {
    if (n < 1) throw std::invalid_argument("endpoint_eval: n must be >= 1");
    EndpointReport rep;
    auto ref_a = teacher_endpoints(teacher, gmm, eta, grid, n, omega_eval, schedule, rng);
    auto ref_b = teacher_endpoints(teacher, gmm, eta, grid, n, omega_eval, schedule, rng);
    rep.noise_floor = sliced_wasserstein(ref_a, ref_b, sw_projections, rng);
    for (int nfe : nfes) {
        auto ends = sample_endpoints(jump, gmm, eta, nfe, schedule, n, rng);
        rep.rows.push_back({nfe, sliced_wasserstein(ends, ref_a, sw_projections, rng)});
    }
    return rep;
}

RunReport train_in_memory(TrainState& st) {
    RunReport report;
    const auto& d = st.cfg.distill;
    if (st.warmup_done < d.warmup_iterations) {
        while (st.warmup_done < d.warmup_iterations) {
            report.warmup_losses.push_back(warmup_iteration(st));
        }
        st.target.params() = st.student.params();
    }
    while (st.iterations_done < d.iterations) {
        report.records.push_back(train_iteration(st));
    }
    return report;
}

namespace {

struct TrainedEval {
    double endpoint_sw = 0.0;
    double gap = 0.0;
    double final_l_std = 0.0;
};

TrainedEval evaluate_trained(TrainState& st, const RunReport& report) {
    TrainedEval out;
    const auto& ev = st.cfg.eval;
    Rng rng(derive_seed(st.cfg.distill.seed, 0xE7A1));
    auto ref = teacher_endpoints(*st.teacher, st.cfg.gmm, st.cfg.distill.eta, st.grid,
                                 ev.eval_samples, ev.omega_eval, st.schedule, rng);
    auto ends = sample_endpoints(student_jump(st.student, st.schedule), st.cfg.gmm,
                                 st.cfg.distill.eta, 4, st.schedule, ev.eval_samples, rng);
    out.endpoint_sw = sliced_wasserstein(ends, ref, ev.sw_projections, rng);
    out.gap = consistency_gap(student_jump(st.student, st.schedule), *st.teacher, st.cfg.gmm,
                              st.cfg.distill.eta, st.schedule, st.grid, 64, 4, ev.omega_eval, rng);
    const size_t n = report.records.size();
    const size_t tail = std::min<size_t>(n, 100);
    for (size_t i = n - tail; i < n; ++i) out.final_l_std += report.records[i].l_std;
    if (tail) out.final_l_std /= static_cast<double>(tail);
    return out;
}

}  // namespace

double ComparisonTable::median_endpoint(const std::string& mode, double delta) const {
    std::vector<double> vals;
    for (const auto& r : rows) {
        if (r.mode == mode && r.delta == delta) vals.push_back(r.endpoint_sw);
    }
    if (vals.empty()) throw std::invalid_argument("median_endpoint: no rows for " + mode);
    std::sort(vals.begin(), vals.end());
    const size_t n = vals.size();
    return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

int ComparisonTable::wins(const std::string& mode_a, const std::string& mode_b, double delta) const {
    int wins = 0;
    for (const auto& ra : rows) {
        if (ra.mode != mode_a || ra.delta != delta) continue;
        for (const auto& rb : rows) {
            if (rb.mode == mode_b && rb.delta == delta && rb.seed == ra.seed) {
                if (ra.endpoint_sw <= rb.endpoint_sw) ++wins;
            }
        }
    }
    return wins;
}

ComparisonTable compare_std_cd(const RunConfig& base, const std::vector<uint64_t>& seeds,
                               double delta, bool include_control) {
    ComparisonTable table;
    std::vector<double> deltas = {delta};
    if (include_control) deltas.push_back(0.0);
    for (double dv : deltas) {
        for (uint64_t seed : seeds) {
            for (RunMode mode : {RunMode::Std, RunMode::BaselineCd}) {
                RunConfig cfg = base;
                cfg.teacher.delta = dv;
                cfg.distill.seed = seed;
                cfg.distill.mode = mode;
                cfg.finalize();
                TrainState st = make_train_state(cfg);
                RunReport report = train_in_memory(st);
                TrainedEval te = evaluate_trained(st, report);
                table.rows.push_back({run_mode_to_string(mode), seed, dv, te.endpoint_sw, te.gap});
            }
        }
    }
    return table;
}

std::vector<AblateRow> ablate_r_rules(const RunConfig& base) {
    std::vector<AblateRow> rows;
    for (RRule rule : {RRule::BelowS, RRule::EqualS, RRule::AboveS, RRule::Zero}) {
        RunConfig cfg = base;
        cfg.distill.r_rule = rule;
        cfg.finalize();
        TrainState st = make_train_state(cfg);
        RunReport report = train_in_memory(st);
        TrainedEval te = evaluate_trained(st, report);
        rows.push_back({r_rule_to_string(rule), cfg.distill.rho, cfg.distill.lambda_adv,
                        te.endpoint_sw, te.gap, te.final_l_std});
    }
    return rows;
}

std::vector<AblateRow> ablate_strength_grid(const RunConfig& base, const std::vector<double>& rhos,
                                            const std::vector<double>& lambdas) {
    std::vector<AblateRow> rows;
    for (double rho : rhos) {
        for (double lambda : lambdas) {
            RunConfig cfg = base;
            cfg.distill.rho = rho;
            cfg.distill.lambda_adv = lambda;
            cfg.finalize();
            TrainState st = make_train_state(cfg);
            RunReport report = train_in_memory(st);
            TrainedEval te = evaluate_trained(st, report);
            rows.push_back({r_rule_to_string(cfg.distill.r_rule), rho, lambda, te.endpoint_sw,
                            te.gap, te.final_l_std});
        }
    }
    return rows;
}

RunConfig bank_bench_config() {
    RunConfig cfg;
    const int K = 48;
    const int d = 8;
    Rng rng(424242);
    cfg.gmm.weights.assign(K, 1.0 / K);
    cfg.gmm.stdevs.assign(K, 0.5);
    cfg.gmm.means.clear();
    for (int k = 0; k < K; ++k) {
        Vec m(d);
        for (auto& x : m) x = rng.uniform(-4.0, 4.0);
        cfg.gmm.means.push_back(std::move(m));
    }
    cfg.student.widths = {16};
    cfg.student.fourier_freqs = 4;
    cfg.student.class_embed_dim = 4;
    cfg.disc.widths = {8};
    cfg.distill.rho = 1.0;
    cfg.distill.warmup_iterations = 0;
    cfg.distill.iterations = 0;  // the bench drives iterations itself
    cfg.distill.batch_size = 256;
    cfg.distill.seed = 7;
    cfg.finalize();
    return cfg;
}

BankBenchResult bank_bench(const RunConfig& cfg_in, int iterations) {
    if (iterations < 1) throw std::invalid_argument("bank_bench: iterations must be >= 1");
    BankBenchResult res;
    {
        RunConfig cfg = cfg_in;
        cfg.distill.mode = RunMode::Std;
        cfg.finalize();
        TrainState st = make_train_state(cfg);
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < iterations; ++i) train_iteration(st);
        res.with_bank_wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        res.with_bank_steps_per_iter =
            static_cast<double>(st.counter.solver_steps) / static_cast<double>(iterations);
    }
    {
        RunConfig cfg = cfg_in;
        cfg.distill.mode = RunMode::Std;
        cfg.finalize();
        TrainState st = make_train_state(cfg);
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < iterations; ++i) no_bank_iteration(st);
        res.no_bank_wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        res.no_bank_steps_per_iter =
            static_cast<double>(st.counter.solver_steps) / static_cast<double>(iterations);
    }
    res.wall_ratio = res.no_bank_wall_ms / res.with_bank_wall_ms;
    return res;
}

}  // namespace stdlab
