#include <cmath>

#include "doctest.h"
#include "stdlab/dynamics.hpp"
#include "stdlab/models.hpp"
#include "stdlab/rng.hpp"

using namespace stdlab;

namespace {

// tiny hand-built schedule: abar(1) = 0.64, abar(2) = 0.25
NoiseSchedule toy_schedule() {
    NoiseSchedule s;
    s.total_steps = 2;
    s.kind = ScheduleKind::LinearBeta;
    s.alpha_bar = {1.0, 0.64, 0.25};
    s.validate();
    return s;
}

struct TwoValuePredictor : NoisePredictor {
    Vec cond_eps, null_eps;
    Vec eps(const Vec&, int, int, const Condition& c) const override {
        return c.is_null() ? null_eps : cond_eps;
    }
    int dim() const override { return static_cast<int>(cond_eps.size()); }
};

}  // namespace

TEST_CASE("perturb boundary and hand value") {
    NoiseSchedule s = toy_schedule();
    Vec x0 = {0.3, -1.2};
    Vec eps = {0.5, 2.0};
    Vec at0 = perturb(x0, 0, eps, s);
    CHECK(at0[0] == x0[0]);
    CHECK(at0[1] == x0[1]);

    Vec zero = {0.0, 0.0};
    Vec noised = perturb(zero, 2, eps, s);
    CHECK(noised[0] == doctest::Approx(std::sqrt(0.75) * 0.5).epsilon(1e-14));

    Vec one = {1.0};
    Vec e1 = {1.0};
    Vec h = perturb(one, 2, e1, s);
    CHECK(h[0] == doctest::Approx(1.3660254037844386).epsilon(1e-12));

    CHECK_THROWS_AS(perturb(one, 1, {1.0, 2.0}, s), std::invalid_argument);
}

TEST_CASE("ddim_step boundary identity is bit-exact") {
    NoiseSchedule s = build_schedule(ScheduleKind::LinearBeta, 100);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        int t = rng.uniform_int(0, 100);
        Vec x = rng.normal_vec(3);
        Vec e = rng.normal_vec(3);
        Vec out = ddim_step(x, t, t, e, s);
        CHECK(out[0] == x[0]);
        CHECK(out[1] == x[1]);
        CHECK(out[2] == x[2]);
    }
}

TEST_CASE("ddim_step hand values") {
    NoiseSchedule s = toy_schedule();
    Vec x = {1.0};
    Vec zero = {0.0};
    Vec rescaled = ddim_step(x, 2, 1, zero, s);
    CHECK(rescaled[0] == doctest::Approx(1.6).epsilon(1e-14));

    Vec e = {0.5};
    Vec out = ddim_step(x, 2, 1, e, s);
    CHECK(out[0] == doctest::Approx(1.2071796769724492).epsilon(1e-12));

    CHECK_THROWS_AS(ddim_step(x, 1, 2, e, s), std::invalid_argument);
}

TEST_CASE("cfg_eps combinations") {
    TwoValuePredictor p;
    p.cond_eps = {2.0};
    p.null_eps = {1.0};
    NoiseSchedule s = toy_schedule();
    Condition c = Condition::class_label(0);

    Vec at0 = cfg_eps(p, {0.0}, 1, 0, c, 0.0);
    CHECK(at0[0] == 2.0);
    Vec at1 = cfg_eps(p, {0.0}, 1, 0, c, 1.0);
    CHECK(at1[0] == doctest::Approx(3.0).epsilon(1e-14));
    p.null_eps = p.cond_eps;
    Vec same = cfg_eps(p, {0.0}, 1, 0, c, 7.5);
    CHECK(same[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("c_coefficient values and sign") {
    NoiseSchedule s = toy_schedule();
    CHECK(c_coefficient(2, 2, s) == 0.0);
    CHECK(c_coefficient(1, 1, s) == 0.0);
    CHECK(c_coefficient(2, 1, s) == doctest::Approx(0.7856406460551019).epsilon(1e-12));
    // s = 0, abar_0 = 1: reduces to sigma_t / sqrt(abar_t)
    CHECK(c_coefficient(2, 0, s) == doctest::Approx(std::sqrt(0.75) / 0.5).epsilon(1e-12));

    NoiseSchedule full = build_schedule(ScheduleKind::LinearBeta, 200);
    for (int t = 1; t <= 200; t += 7) {
        for (int q = 0; q < t; q += 11) {
            CHECK(c_coefficient(t, q, full) >= 0.0);
        }
    }
}

TEST_CASE("one_step_residual: perfectly informed teacher gives zero") {
    NoiseSchedule s = toy_schedule();
    Vec x0 = {1.0};
    Vec eps = {1.0};
    FixedEpsPredictor teacher(eps);
    ResidualPair rp = one_step_residual(x0, eps, 2, 1, teacher, s);
    CHECK(std::fabs(rp.residual[0]) <= 1e-12);
    CHECK(std::fabs(rp.predicted[0]) <= 1e-12);
}

TEST_CASE("one_step_residual hand example") {
    NoiseSchedule s = toy_schedule();
    Vec x0 = {1.0};
    Vec eps = {1.0};
    FixedEpsPredictor teacher(Vec{0.5});
    ResidualPair rp = one_step_residual(x0, eps, 2, 1, teacher, s);
    CHECK(rp.residual[0] == doctest::Approx(0.39282032302755093).epsilon(1e-10));
    CHECK(rp.predicted[0] == doctest::Approx(0.39282032302755093).epsilon(1e-10));
    CHECK(std::fabs(rp.residual[0] - rp.predicted[0]) <= 1e-12);

    // zero-length jump: residual vanishes for any teacher
    ResidualPair same = one_step_residual(x0, eps, 2, 2, teacher, s);
    CHECK(same.residual[0] == 0.0);
}

TEST_CASE("one-step identity holds for an arbitrary teacher") {
    NoiseSchedule s = build_schedule(ScheduleKind::LinearBeta, 1000);
    GmmSpec gmm;
    gmm.weights = {0.4, 0.6};
    gmm.means = {{-1.5, 0.2}, {2.0, -0.7}};
    gmm.stdevs = {0.5, 0.9};
    AnalyticTeacher teacher(gmm, s);
    Rng rng(11);
    double max_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto [x0, cond] = gmm_sample(gmm, Condition::null_cond(), rng);
        Vec eps = rng.normal_vec(2);
        int t = rng.uniform_int(2, 1000);
        int q = rng.uniform_int(1, t);
        ResidualPair rp = one_step_residual(x0, eps, t, q, teacher, s);
        for (size_t j = 0; j < rp.residual.size(); ++j) {
            max_err = std::max(max_err, std::fabs(rp.residual[j] - rp.predicted[j]));
        }
        // imperfect prediction away from the boundary must displace the trajectory
        if (q < t && l2_norm(rp.predicted) > 1e-8) CHECK(l2_norm(rp.residual) > 0.0);
    }
    CHECK(max_err <= 1e-9);
}

TEST_CASE("rollout with one step equals a single ddim_step") {
    NoiseSchedule s = toy_schedule();
    GmmSpec gmm;
    gmm.weights = {1.0};
    gmm.means = {{0.0}};
    gmm.stdevs = {1.0};
    AnalyticTeacher teacher(gmm, s);
    StepGrid g;
    g.timesteps = {2, 1};
    Vec x = {0.7};
    Trajectory traj = rollout(teacher, x, g, Condition::null_cond(), 0.0, s);
    REQUIRE(traj.states.size() == 2);
    Vec manual = ddim_step(x, 2, 1, teacher.eps(x, 2, 1, Condition::null_cond()), s);
    CHECK(traj.states[1].second[0] == manual[0]);

    StepGrid bad;
    bad.timesteps = {2};
    CHECK_THROWS_AS(rollout(teacher, x, bad, Condition::null_cond(), 0.0, s), std::invalid_argument);
}

TEST_CASE("rollout on a standard gaussian applies the closed-form linear map") {
    NoiseSchedule s = toy_schedule();
    GmmSpec gmm;
    gmm.weights = {1.0};
    gmm.means = {{0.0}};
    gmm.stdevs = {1.0};
    AnalyticTeacher teacher(gmm, s);
    StepGrid g;
    g.timesteps = {2, 1};
    Vec x = {1.0};
    Trajectory traj = rollout(teacher, x, g, Condition::null_cond(), 0.0, s);
    CHECK(traj.states[1].second[0] == doctest::Approx(0.9196152422706633).epsilon(1e-12));
}

TEST_CASE("two-step rollout composes teacher evaluations at intermediate states") {
    NoiseSchedule s = build_schedule(ScheduleKind::LinearBeta, 100);
    GmmSpec gmm;
    gmm.weights = {0.5, 0.5};
    gmm.means = {{-2.0}, {2.0}};
    gmm.stdevs = {0.4, 0.4};
    AnalyticTeacher teacher(gmm, s);
    StepGrid g;
    g.timesteps = {90, 45, 0};
    Vec x = {0.8};
    Condition c = Condition::null_cond();
    Trajectory traj = rollout(teacher, x, g, c, 0.0, s);

    Vec mid = ddim_step(x, 90, 45, teacher.eps(x, 90, 45, c), s);
    Vec end = ddim_step(mid, 45, 0, teacher.eps(mid, 45, 0, c), s);
    CHECK(traj.states[2].second[0] == end[0]);

    // a single long jump differs for this nonlinear teacher
    Vec single = ddim_step(x, 90, 0, teacher.eps(x, 90, 0, c), s);
    CHECK(std::fabs(single[0] - end[0]) > 1e-9);
}

TEST_CASE("perturb sample moments match the closed form") {
    NoiseSchedule s = build_schedule(ScheduleKind::LinearBeta, 1000);
    const int t = 400;
    const int n = 100000;
    Rng rng(17);
    Vec x0 = {1.0};
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        mean += perturb(x0, t, rng.normal_vec(1), s)[0];
    }
    mean /= n;
    const double tol = 4.0 * std::sqrt((1.0 - s.abar(t)) / n);
    CHECK(std::fabs(mean - s.sqrt_abar(t) * 1.0) <= tol);
}

TEST_CASE("teacher_cfg_step counts one solver step and two model evaluations") {
    NoiseSchedule s = build_schedule(ScheduleKind::LinearBeta, 100);
    GmmSpec gmm;
    gmm.weights = {1.0};
    gmm.means = {{0.0}};
    gmm.stdevs = {1.0};
    AnalyticTeacher teacher(gmm, s);
    SolverCounter counter;
    std::vector<Vec> x = {{0.5}, {-0.3}};
    teacher_cfg_step(teacher, x, {80, 60}, {60, 40}, {Condition::class_label(0), Condition::null_cond()},
                     {1.0, 0.5}, s, &counter);
    CHECK(counter.solver_steps == 1);
    CHECK(counter.model_evals == 2);
}
