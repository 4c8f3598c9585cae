#include <cmath>

#include "doctest.h"
#include "stdlab/gradcheck.hpp"
#include "stdlab/graph.hpp"
#include "stdlab/nets.hpp"
#include "stdlab/optim.hpp"
#include "stdlab/rng.hpp"
#include "stdlab/schedule.hpp"

using namespace stdlab;

namespace {

StudentConfig small_student(int d = 2, int classes = 2) {
    StudentConfig c;
    c.dim = d;
    c.n_classes = classes;
    c.widths = {8, 6};
    c.fourier_freqs = 3;
    c.class_embed_dim = 4;
    return c;
}

// straight-line reimplementation of the student forward pass
Vec reference_forward(const StudentNet& net, const Vec& x, double tn, double sn,
                      const Condition& cond) {
    const StudentConfig cfg = net.config();
    Vec input = x;
    Vec tf = fourier_features(tn, cfg.fourier_freqs);
    input.insert(input.end(), tf.begin(), tf.end());
    if (cfg.condition_on_s) {
        Vec sf = fourier_features(sn, cfg.fourier_freqs);
        input.insert(input.end(), sf.begin(), sf.end());
    }
    const auto& emb = net.params().at("class_embed");
    const int row = cond.is_null() ? cfg.n_classes : cond.label;
    for (int j = 0; j < cfg.class_embed_dim; ++j) {
        input.push_back(emb.data[static_cast<size_t>(row * cfg.class_embed_dim + j)]);
    }

    Vec h = input;
    const size_t n_layers = cfg.widths.size() + 1;
    for (size_t l = 0; l < n_layers; ++l) {
        const auto& w = net.params().at("fc" + std::to_string(l) + ".w");
        const auto& b = net.params().at("fc" + std::to_string(l) + ".b");
        const size_t in = w.shape[0], out = w.shape[1];
        Vec next(out, 0.0);
        for (size_t j = 0; j < out; ++j) {
            double acc = b.data[j];
            for (size_t i = 0; i < in; ++i) acc += h[i] * w.data[i * out + j];
            next[j] = l + 1 < n_layers ? std::tanh(acc) : acc;
        }
        h = std::move(next);
    }
    return h;
}

}  // namespace

TEST_CASE("zero-initialized output layer predicts the zero vector") {
    StudentNet net(small_student(), 3);
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        Vec out = net.forward(rng.normal_vec(2), rng.uniform(), rng.uniform(), Condition::class_label(0));
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
    }
}

TEST_CASE("student forward is deterministic and matches the reference implementation") {
    StudentNet net(small_student(), 3);
    Rng rng(4);
    net.randomize(rng, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = rng.normal_vec(2);
        double tn = rng.uniform();
        double sn = rng.uniform() * tn;
        Condition c = trial % 3 == 0 ? Condition::null_cond() : Condition::class_label(trial % 2);
        Vec a = net.forward(x, tn, sn, c);
        Vec b = net.forward(x, tn, sn, c);
        CHECK(a[0] == b[0]);
        CHECK(a[1] == b[1]);
        Vec ref = reference_forward(net, x, tn, sn, c);
        CHECK(a[0] == doctest::Approx(ref[0]).epsilon(1e-12));
        CHECK(a[1] == doctest::Approx(ref[1]).epsilon(1e-12));
    }
}

TEST_CASE("consistency_fn boundary identity for random parameters") {
    NoiseSchedule s = build_schedule(ScheduleKind::LinearBeta, 100);
    StudentNet net(small_student(), 6);
    Rng rng(8);
    net.randomize(rng, 0.8);
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = rng.normal_vec(2);
        int t = rng.uniform_int(0, 100);
        Vec fx = consistency_fn(net, x, t, t, Condition::class_label(0), s);
        CHECK(fx[0] == x[0]);
        CHECK(fx[1] == x[1]);
    }
    // and the jump case equals ddim on the network prediction
    Vec x = {0.4, -0.2};
    Vec eps_hat = net.forward(x, 0.8, 0.3, Condition::class_label(1));
    Vec expect = ddim_step(x, 80, 30, eps_hat, s);
    Vec got = consistency_fn(net, x, 80, 30, Condition::class_label(1), s);
    CHECK(got[0] == expect[0]);
    CHECK(got[1] == expect[1]);
    CHECK_THROWS_AS(consistency_fn(net, x, 30, 80, Condition::class_label(1), s), std::invalid_argument);
}

TEST_CASE("backward: zero loss and unused parameters give zero gradients") {
    ParamStore store;
    auto& w = store.add("w", {4});
    auto& u = store.add("unused", {3});
    for (size_t i = 0; i < 4; ++i) w.data[i] = 0.5 * (static_cast<double>(i) + 1.0);
    for (size_t i = 0; i < 3; ++i) u.data[i] = 1.0;

    Graph g;
    int wn = g.param(store, "w");
    int loss = g.scale(g.sum_all(g.mul(wn, wn)), 0.0);
    g.backward(loss);
    ParamStore grads = g.grads_for(store);
    for (size_t i = 0; i < 4; ++i) CHECK(grads.at("w").data[i] == 0.0);
    for (size_t i = 0; i < 3; ++i) CHECK(grads.at("unused").data[i] == 0.0);
}

TEST_CASE("backward: quadratic loss gradient equals the parameter") {
    ParamStore store;
    auto& w = store.add("w", {5});
    Rng rng(12);
    for (auto& v : w.data) v = rng.normal();

    Graph g;
    int wn = g.param(store, "w");
    int loss = g.scale(g.sum_all(g.mul(wn, wn)), 0.5);
    g.backward(loss);
    ParamStore grads = g.grads_for(store);
    for (size_t i = 0; i < 5; ++i) {
        CHECK(grads.at("w").data[i] == doctest::Approx(w.data[i]).epsilon(1e-14));
    }
}

TEST_CASE("finite-difference gradient check across random configurations") {
    GradCheckReport rep = run_standard_gradcheck(2024, 5);
    CHECK(rep.passed);
    CHECK(rep.max_rel_err < 1e-4);
    CHECK(rep.coords_checked > 1000);
}

TEST_CASE("adam: zero gradient from a fresh state leaves parameters unchanged") {
    ParamStore params;
    auto& w = params.add("w", {2});
    w.data = {1.0, -2.0};
    AdamState st = make_adam_state(params);
    ParamStore grads = params.zeros_like();
    adam_step(params, grads, st, 0.1);
    CHECK(params.at("w").data[0] == 1.0);
    CHECK(params.at("w").data[1] == -2.0);
    CHECK(st.step == 1);

    // with accumulated momentum the moments decay by their beta factors
    st.m.at("w").data = {0.5, 0.5};
    st.v.at("w").data = {0.25, 0.25};
    adam_step(params, grads, st, 0.1);
    CHECK(st.m.at("w").data[0] == doctest::Approx(0.45).epsilon(1e-14));
    CHECK(st.v.at("w").data[0] == doctest::Approx(0.25 * 0.999).epsilon(1e-14));
}

TEST_CASE("adam: first step matches the hand-evaluated update") {
    ParamStore params;
    params.add("w", {1}).data = {1.0};
    AdamState st = make_adam_state(params);
    ParamStore grads = params.zeros_like();
    grads.at("w").data = {2.0};
    adam_step(params, grads, st, 0.01);
    CHECK(params.at("w").data[0] == doctest::Approx(1.0 - 0.009999999950000001).epsilon(1e-14));
}

TEST_CASE("adam: separate groups step with their own learning rates") {
    ParamStore a, b;
    a.add("w", {1}).data = {0.0};
    b.add("w", {1}).data = {0.0};
    AdamState sa = make_adam_state(a), sb = make_adam_state(b);
    ParamStore ga = a.zeros_like(), gb = b.zeros_like();
    ga.at("w").data = {1.0};
    gb.at("w").data = {1.0};
    adam_step(a, ga, sa, 0.1);
    adam_step(b, gb, sb, 0.001);
    CHECK(std::fabs(a.at("w").data[0]) > 50.0 * std::fabs(b.at("w").data[0]));
}

TEST_CASE("ema_update endpoints and interval property") {
    ParamStore minus, theta;
    minus.add("w", {3}).data = {1.0, -1.0, 0.5};
    theta.add("w", {3}).data = {0.0, 1.0, 0.5};

    ParamStore keep = minus;
    ema_update(keep, theta, 1.0);
    CHECK(keep.at("w").data == minus.at("w").data);

    ParamStore jump = minus;
    ema_update(jump, theta, 0.0);
    CHECK(jump.at("w").data == theta.at("w").data);

    ParamStore mid = minus;
    ema_update(mid, theta, 0.95);
    CHECK(mid.at("w").data[0] == doctest::Approx(0.95).epsilon(1e-14));
    for (size_t i = 0; i < 3; ++i) {
        const double lo = std::min(minus.at("w").data[i], theta.at("w").data[i]);
        const double hi = std::max(minus.at("w").data[i], theta.at("w").data[i]);
        CHECK(mid.at("w").data[i] >= lo - 1e-15);
        CHECK(mid.at("w").data[i] <= hi + 1e-15);
    }
}

TEST_CASE("graph embedding and concat gradients flow") {
    ParamStore store;
    auto& emb = store.add("emb", {3, 2});
    for (size_t i = 0; i < emb.data.size(); ++i) emb.data[i] = static_cast<double>(i);

    Graph g;
    int table = g.param(store, "emb");
    int rows = g.embedding(table, {2, 0, 2});
    int loss = g.sum_all(rows);
    g.backward(loss);
    ParamStore grads = g.grads_for(store);
    // row 2 picked twice, row 0 once, row 1 never
    CHECK(grads.at("emb").data[0] == 1.0);
    CHECK(grads.at("emb").data[1] == 1.0);
    CHECK(grads.at("emb").data[2] == 0.0);
    CHECK(grads.at("emb").data[3] == 0.0);
    CHECK(grads.at("emb").data[4] == 2.0);
    CHECK(grads.at("emb").data[5] == 2.0);
}
