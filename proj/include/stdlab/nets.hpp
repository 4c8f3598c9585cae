#pragma once

#include <string>
#include <vector>

#include "stdlab/common.hpp"
#include "stdlab/graph.hpp"
#include "stdlab/params.hpp"
#include "stdlab/rng.hpp"
#include "stdlab/dynamics.hpp"
#include "stdlab/models.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

// sin/cos features of a normalized scalar in [0,1]; frequencies 2^k, k < freqs.
Vec fourier_features(double u, int freqs);

struct StudentConfig {
    int dim = 2;
    int n_classes = 2;
    std::vector<int> widths = {128, 128, 128};
    std::string activation = "tanh";
    int fourier_freqs = 8;
    int class_embed_dim = 8;
    bool condition_on_s = true;
};

// Trainable eps-predictor conditioned on (x, t, s, c). Timesteps arrive already
// normalized to [0,1]. The class embedding has a dedicated null row. The output
// layer starts at zero, so a fresh network predicts the zero vector.
class StudentNet {
public:
    StudentNet(StudentConfig cfg, uint64_t seed);

    // builds the forward pass on a graph; X is (batch x dim), one t/s/label per row.
    // trainable = false binds parameters as constants (no gradient tracking).
    int build_forward(Graph& g, const Tensor& x, const std::vector<double>& t_norm,
                      const std::vector<double>& s_norm, const std::vector<Condition>& conds,
                      bool trainable) const;

    Vec forward(const Vec& x, double t_norm, double s_norm, const Condition& cond) const;

    StudentConfig config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    int input_dim() const;

    void randomize(Rng& rng, double scale = 0.5);  // all entries, incl. output layer

private:
    StudentConfig cfg_;
    ParamStore params_;
    int n_layers() const { return static_cast<int>(cfg_.widths.size()); }
};

struct DiscConfig {
    int in_dim = 2;  // feature-map output dimension
    std::vector<int> widths = {64, 64};
};

// Scalar-logit critic over feature-map outputs. No timestep input.
class Discriminator {
public:
    Discriminator(DiscConfig cfg, uint64_t seed);

    int build_forward(Graph& g, int input_node, bool trainable) const;  // (batch x 1) logits
    double forward(const Vec& features) const;

    DiscConfig config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    void randomize(Rng& rng, double scale = 0.5);

private:
    DiscConfig cfg_;
    ParamStore params_;
};

// f(x, t, s) = ddim_step(x, t, s, student(x, t, s, c)). The boundary identity
// f(x, t, t) = x holds for any parameters.
Vec consistency_fn(const StudentNet& net, const Vec& x, int t, int s, const Condition& cond,
                   const NoiseSchedule& schedule);

// Graph form of the DDIM jump with per-row (t, s): f = a .* x + b .* eps_hat.
int build_consistency_jump(Graph& g, int x_node, int eps_hat_node, const std::vector<int>& t,
                           const std::vector<int>& s, const NoiseSchedule& schedule);

// Feature map inside the graph (identity, or tanh of a constant projection).
int build_feature_map(Graph& g, const FeatureMap& fmap, int input_node);

}  // namespace stdlab
