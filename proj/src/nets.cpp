#include "stdlab/nets.hpp"

#include <cmath>

#include "stdlab/dynamics.hpp"

namespace stdlab {

Vec fourier_features(double u, int freqs) {
    Vec out(static_cast<size_t>(2 * freqs));
    double f = 2.0 * 3.14159265358979323846;
    for (int k = 0; k < freqs; ++k) {
        out[static_cast<size_t>(2 * k)] = std::sin(f * u);
        out[static_cast<size_t>(2 * k + 1)] = std::cos(f * u);
        f *= 2.0;
    }
    return out;
}

namespace {

void init_mlp_params(ParamStore& store, const std::vector<int>& dims, Rng& rng) {
    // hidden layers Xavier-uniform, output layer zeroed
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = static_cast<uint64_t>(dims[l]);
        const auto out = static_cast<uint64_t>(dims[l + 1]);
        auto& w = store.add("fc" + std::to_string(l) + ".w", {in, out});
        store.add("fc" + std::to_string(l) + ".b", {out});
        const bool is_output = (l + 2 == dims.size());
        if (!is_output) {
            const double a = std::sqrt(6.0 / static_cast<double>(in + out));
            for (auto& x : w.data) x = rng.uniform(-a, a);
        }
    }
}

void randomize_store(ParamStore& store, Rng& rng, double scale) {
    for (size_t i = 0; i < store.size(); ++i) {
        for (auto& x : store.entry(i).data) x = scale * rng.normal();
    }
}

// shared MLP builder: input node -> logits node
int build_mlp(Graph& g, const ParamStore& params, int input, size_t n_layers, bool trainable) {
    int h = input;
    for (size_t l = 0; l < n_layers; ++l) {
        const std::string p = "fc" + std::to_string(l);
        int wm = g.param(params, p + ".w", trainable);
        int bm = g.param(params, p + ".b", trainable);
        h = g.add_rowvec(g.matmul(h, wm), bm);
        if (l + 1 < n_layers) h = g.tanh_op(h);
    }
    return h;
}

}  // namespace

StudentNet::StudentNet(StudentConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    if (cfg_.dim < 1) throw std::invalid_argument("StudentNet: dim must be >= 1");
    if (cfg_.n_classes < 1) throw std::invalid_argument("StudentNet: n_classes must be >= 1");
    if (cfg_.activation != "tanh") {
        throw std::invalid_argument("StudentNet: unsupported activation " + cfg_.activation);
    }
    Rng rng(seed);
    std::vector<int> dims;
    dims.push_back(input_dim());
    for (int w : cfg_.widths) dims.push_back(w);
    dims.push_back(cfg_.dim);
    init_mlp_params(params_, dims, rng);
    auto& emb = params_.add("class_embed", {static_cast<uint64_t>(cfg_.n_classes) + 1,
                                            static_cast<uint64_t>(cfg_.class_embed_dim)});
    for (auto& x : emb.data) x = rng.uniform(-0.1, 0.1);
}

int StudentNet::input_dim() const {
    int n = cfg_.dim + 2 * cfg_.fourier_freqs + cfg_.class_embed_dim;
    if (cfg_.condition_on_s) n += 2 * cfg_.fourier_freqs;
    return n;
}

int StudentNet::build_forward(Graph& g, const Tensor& x, const std::vector<double>& t_norm,
                              const std::vector<double>& s_norm, const std::vector<Condition>& conds,
                              bool trainable) const {
    const size_t batch = x.rows;
    if (t_norm.size() != batch || s_norm.size() != batch || conds.size() != batch) {
        throw std::invalid_argument("StudentNet::build_forward: batch size mismatch");
    }
    Tensor tfeat(batch, static_cast<size_t>(2 * cfg_.fourier_freqs));
    Tensor sfeat(batch, static_cast<size_t>(2 * cfg_.fourier_freqs));
    std::vector<int> rows(batch);
    for (size_t i = 0; i < batch; ++i) {
        Vec tf = fourier_features(t_norm[i], cfg_.fourier_freqs);
        for (size_t j = 0; j < tf.size(); ++j) tfeat.v[i * tfeat.cols + j] = tf[j];
        if (cfg_.condition_on_s) {
            Vec sf = fourier_features(s_norm[i], cfg_.fourier_freqs);
            for (size_t j = 0; j < sf.size(); ++j) sfeat.v[i * sfeat.cols + j] = sf[j];
        }
        rows[i] = conds[i].is_null() ? cfg_.n_classes : conds[i].label;
        if (rows[i] > cfg_.n_classes) {
            throw std::invalid_argument("StudentNet::build_forward: label out of range");
        }
    }

    std::vector<int> parts;
    parts.push_back(g.constant(x));
    parts.push_back(g.constant(std::move(tfeat)));
    if (cfg_.condition_on_s) parts.push_back(g.constant(std::move(sfeat)));
    int emb = g.param(params_, "class_embed", trainable);
    parts.push_back(g.embedding(emb, rows));

    int input = g.concat_cols(parts);
    return build_mlp(g, params_, input, cfg_.widths.size() + 1, trainable);
}

Vec StudentNet::forward(const Vec& x, double t_norm, double s_norm, const Condition& cond) const {
    check_dim(x, static_cast<size_t>(cfg_.dim), "StudentNet::forward");
    Graph g;
    Tensor xt(1, x.size());
    xt.v = x;
    int out = build_forward(g, xt, {t_norm}, {s_norm}, {cond}, false);
    const Tensor& v = g.value(out);
    Vec result = v.v;
    if (!all_finite(result)) {
        throw std::runtime_error("StudentNet::forward: non-finite output (t_norm=" +
                                 std::to_string(t_norm) + ", s_norm=" + std::to_string(s_norm) + ")");
    }
    return result;
}

void StudentNet::randomize(Rng& rng, double scale) { randomize_store(params_, rng, scale); }

Discriminator::Discriminator(DiscConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    if (cfg_.in_dim < 1) throw std::invalid_argument("Discriminator: in_dim must be >= 1");
    Rng rng(seed);
    std::vector<int> dims;
    dims.push_back(cfg_.in_dim);
    for (int w : cfg_.widths) dims.push_back(w);
    dims.push_back(1);
    init_mlp_params(params_, dims, rng);
}

int Discriminator::build_forward(Graph& g, int input_node, bool trainable) const {
    return build_mlp(g, params_, input_node, cfg_.widths.size() + 1, trainable);
}

double Discriminator::forward(const Vec& features) const {
    check_dim(features, static_cast<size_t>(cfg_.in_dim), "Discriminator::forward");
    Graph g;
    Tensor xt(1, features.size());
    xt.v = features;
    int out = build_forward(g, g.constant(std::move(xt)), false);
    return g.value(out).v[0];
}

void Discriminator::randomize(Rng& rng, double scale) { randomize_store(params_, rng, scale); }

Vec consistency_fn(const StudentNet& net, const Vec& x, int t, int s, const Condition& cond,
                   const NoiseSchedule& schedule) {
    if (s > t) throw std::invalid_argument("consistency_fn: need s <= t");
    if (s == t) return x;  // boundary identity, parameter-free
    const double T = static_cast<double>(schedule.total_steps);
    Vec eps_hat = net.forward(x, t / T, s / T, cond);
    return ddim_step(x, t, s, eps_hat, schedule);
}

int build_consistency_jump(Graph& g, int x_node, int eps_hat_node, const std::vector<int>& t,
                           const std::vector<int>& s, const NoiseSchedule& schedule) {
    const size_t batch = g.value(x_node).rows;
    if (t.size() != batch || s.size() != batch) {
        throw std::invalid_argument("build_consistency_jump: batch size mismatch");
    }
    std::vector<double> a(batch), b(batch);
    for (size_t i = 0; i < batch; ++i) {
        auto [ai, bi] = ddim_coeffs(t[i], s[i], schedule);
        a[i] = ai;
        b[i] = bi;
    }
    return g.add(g.scale_rows(x_node, a), g.scale_rows(eps_hat_node, b));
}

int build_feature_map(Graph& g, const FeatureMap& fmap, int input_node) {
    if (fmap.kind() == FeatureKind::Identity) return input_node;
    Tensor p(static_cast<size_t>(fmap.in_dim()), static_cast<size_t>(fmap.out_dim()));
    p.v = fmap.projection();
    return g.tanh_op(g.matmul(input_node, g.constant(std::move(p))));
}

}  // namespace stdlab
