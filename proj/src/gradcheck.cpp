#include "stdlab/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "stdlab/graph.hpp"
#include "stdlab/models.hpp"
#include "stdlab/nets.hpp"
#include "stdlab/rng.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

GradCheckReport check_gradients(const std::function<double(const ParamStore&)>& loss_fn,
                                const ParamStore& params, const ParamStore& analytic,
                                double h, double tol, double abs_escape) {
    GradCheckReport rep;
    ParamStore work = params;
    for (size_t e = 0; e < work.size(); ++e) {
        auto& data = work.entry(e).data;
        const auto& grad = analytic.entry(e).data;
        for (size_t j = 0; j < data.size(); ++j) {
            const double saved = data[j];
            data[j] = saved + h;
            const double up = loss_fn(work);
            data[j] = saved - h;
            const double dn = loss_fn(work);
            data[j] = saved;
            const double fd = (up - dn) / (2.0 * h);
            const double ad = grad[j];
            const double err = std::fabs(fd - ad);
            double rel = 0.0;
            if (err >= abs_escape) {
                const double denom = std::max(std::fabs(fd), std::fabs(ad));
                rel = denom > 0.0 ? err / denom : 1e300;
            }
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_coord = work.entry(e).name + "[" + std::to_string(j) + "]";
            }
            rep.coords_checked++;
        }
    }
    rep.passed = rep.max_rel_err < tol;
    return rep;
}

namespace {

struct CheckProblem {
    StudentNet student;
    Discriminator disc;
    FeatureMap fmap;
    NoiseSchedule schedule;
    Tensor x;
    std::vector<int> t, s;
    std::vector<Condition> conds;
    Tensor target;
    Tensor real_feat;
};

CheckProblem make_problem(uint64_t seed, int variant) {
    Rng rng(seed);
    const int d = 1 + variant % 3;
    const int n_classes = 1 + variant % 2;
    StudentConfig scfg;
    scfg.dim = d;
    scfg.n_classes = n_classes;
    scfg.widths = {8, 6};
    scfg.fourier_freqs = 3;
    scfg.class_embed_dim = 4;
    scfg.condition_on_s = (variant % 2 == 0);

    FeatureKind fk = variant % 2 == 0 ? FeatureKind::RandomProjection : FeatureKind::Identity;
    FeatureMap fmap(fk, d, 5, seed + 9);
    DiscConfig dcfg;
    dcfg.in_dim = fmap.out_dim();
    dcfg.widths = {6, 5};

    CheckProblem p{StudentNet(scfg, seed + 1), Discriminator(dcfg, seed + 2), std::move(fmap),
                   build_schedule(ScheduleKind::LinearBeta, 40), Tensor(), {}, {}, {}, Tensor(), Tensor()};
    p.student.randomize(rng, 0.4);
    p.disc.randomize(rng, 0.4);

    const size_t batch = 3;
    p.x = Tensor(batch, static_cast<size_t>(d));
    p.target = Tensor(batch, static_cast<size_t>(d));
    p.real_feat = Tensor(batch, static_cast<size_t>(p.disc.config().in_dim));
    for (auto& v : p.x.v) v = rng.normal();
    for (auto& v : p.target.v) v = rng.normal();
    for (auto& v : p.real_feat.v) v = 0.7 * rng.normal();
    for (size_t i = 0; i < batch; ++i) {
        int t = rng.uniform_int(5, 40);
        int s = rng.uniform_int(0, t - 1);
        p.t.push_back(t);
        p.s.push_back(s);
        p.conds.push_back(rng.uniform() < 0.3 ? Condition::null_cond()
                                              : Condition::class_label(rng.uniform_int(0, n_classes - 1)));
    }
    return p;
}

// student objective: consistency-jump MSE plus the generator hinge path
double student_loss_and_grads(const CheckProblem& p, const StudentNet& net, ParamStore* grads_out) {
    Graph g;
    const size_t batch = p.x.rows;
    const double T = static_cast<double>(p.schedule.total_steps);
    std::vector<double> tn(batch), sn(batch);
    for (size_t i = 0; i < batch; ++i) {
        tn[i] = p.t[i] / T;
        sn[i] = p.s[i] / T;
    }
    int eps_hat = net.build_forward(g, p.x, tn, sn, p.conds, grads_out != nullptr);
    int f = build_consistency_jump(g, g.constant(p.x), eps_hat, p.t, p.s, p.schedule);
    int diff = g.sub(f, g.constant(p.target));
    int l_std = g.scale(g.sum_all(g.mul(diff, diff)), 1.0 / static_cast<double>(batch));

    int feat = build_feature_map(g, p.fmap, f);
    int d_fake = p.disc.build_forward(g, feat, false);
    int l_gen = g.scale(g.sum_all(d_fake), -1.0 / static_cast<double>(batch));
    int loss = g.add(l_std, g.scale(l_gen, 0.3));

    if (grads_out) {
        g.backward(loss);
        *grads_out = g.grads_for(net.params());
    }
    return g.scalar(loss);
}

double disc_loss_and_grads(const CheckProblem& p, const StudentNet& student, const Discriminator& disc,
                           ParamStore* grads_out) {
    Graph g;
    const size_t batch = p.x.rows;
    const double T = static_cast<double>(p.schedule.total_steps);
    std::vector<double> tn(batch), sn(batch);
    for (size_t i = 0; i < batch; ++i) {
        tn[i] = p.t[i] / T;
        sn[i] = p.s[i] / T;
    }
    // fake samples are detached for the discriminator update
    Graph fg;
    int eps_hat = student.build_forward(fg, p.x, tn, sn, p.conds, false);
    int f = build_consistency_jump(fg, fg.constant(p.x), eps_hat, p.t, p.s, p.schedule);
    Tensor fake_value = fg.value(f);

    int fake_feat = build_feature_map(g, p.fmap, g.constant(std::move(fake_value)));
    int d_fake = disc.build_forward(g, fake_feat, grads_out != nullptr);
    int d_real = disc.build_forward(g, g.constant(p.real_feat), grads_out != nullptr);
    int hinge_fake = g.relu(g.add_scalar(d_fake, 1.0));
    int hinge_real = g.relu(g.add_scalar(g.scale(d_real, -1.0), 1.0));
    int loss = g.add(g.scale(g.sum_all(hinge_fake), 1.0 / static_cast<double>(batch)),
                     g.scale(g.sum_all(hinge_real), 1.0 / static_cast<double>(batch)));
    if (grads_out) {
        g.backward(loss);
        *grads_out = g.grads_for(disc.params());
    }
    return g.scalar(loss);
}

}  // namespace

GradCheckReport run_standard_gradcheck(uint64_t seed, int n_configs, bool verbose) {
    GradCheckReport worst;
    worst.passed = true;
    for (int c = 0; c < n_configs; ++c) {
        CheckProblem p = make_problem(derive_seed(seed, static_cast<uint64_t>(c)), c);

        ParamStore sgrads;
        student_loss_and_grads(p, p.student, &sgrads);
        StudentNet probe = p.student;
        auto student_fn = [&](const ParamStore& ps) {
            probe.params() = ps;
            return student_loss_and_grads(p, probe, nullptr);
        };
        GradCheckReport rs = check_gradients(student_fn, p.student.params(), sgrads);

        ParamStore dgrads;
        disc_loss_and_grads(p, p.student, p.disc, &dgrads);
        Discriminator dprobe = p.disc;
        auto disc_fn = [&](const ParamStore& ps) {
            dprobe.params() = ps;
            return disc_loss_and_grads(p, p.student, dprobe, nullptr);
        };
        GradCheckReport rd = check_gradients(disc_fn, p.disc.params(), dgrads);

        if (verbose) {
            std::printf("gradcheck config %d: student max_rel_err=%.3e (%s), disc max_rel_err=%.3e (%s)\n",
                        c, rs.max_rel_err, rs.worst_coord.c_str(), rd.max_rel_err, rd.worst_coord.c_str());
        }
        for (const auto& r : {rs, rd}) {
            worst.coords_checked += r.coords_checked;
            if (r.max_rel_err > worst.max_rel_err) {
                worst.max_rel_err = r.max_rel_err;
                worst.worst_coord = r.worst_coord;
            }
            worst.passed = worst.passed && r.passed;
        }
    }
    return worst;
}

}  // namespace stdlab
