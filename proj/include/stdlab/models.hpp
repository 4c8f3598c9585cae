#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stdlab/common.hpp"
#include "stdlab/dynamics.hpp"
#include "stdlab/rng.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

// Mixture of isotropic Gaussians; the synthetic data law with exact scores.
struct GmmSpec {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<double> stdevs;

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
    void validate() const;
};

// Draws (x0, label). A null condition draws the component from the weights;
// a class label restricts to that component. The drawn label is always returned.
std::pair<Vec, Condition> gmm_sample(const GmmSpec& spec, const Condition& cond, Rng& rng);

// Exact MMSE noise prediction E[eps | x_t] via Gaussian conjugacy.
// cond = class label restricts the posterior to one component.
Vec analytic_eps(const GmmSpec& spec, const Vec& x_t, int t, const Condition& cond,
                 const NoiseSchedule& schedule);

// log p_t(x_t) of the noised mixture (log-sum-exp over components).
double log_marginal_density(const GmmSpec& spec, const Vec& x_t, int t, const Condition& cond,
                            const NoiseSchedule& schedule);

// The "perfect" teacher: analytic_eps behind the NoisePredictor interface.
class AnalyticTeacher : public NoisePredictor {
public:
    AnalyticTeacher(GmmSpec spec, NoiseSchedule schedule)
        : spec_(std::move(spec)), schedule_(std::move(schedule)) {
        spec_.validate();
    }

    Vec eps(const Vec& x, int t, int /*s*/, const Condition& cond) const override {
        return analytic_eps(spec_, x, t, cond, schedule_);
    }
    int dim() const override { return spec_.dim(); }

    const GmmSpec& spec() const { return spec_; }

private:
    GmmSpec spec_;
    NoiseSchedule schedule_;
};

enum class FieldKind { ConstantVector, SeededSinusoidal };

FieldKind field_kind_from_string(const std::string& s);
std::string field_kind_to_string(FieldKind k);

// Controlled imperfect teacher: eps_phi = base(x, t) + delta * u(x, t) with
// ||u||_inf <= 1. The constant field is the first basis vector; the sinusoidal
// field is deterministic given the seed.
class PerturbedTeacher : public NoisePredictor {
public:
    PerturbedTeacher(std::shared_ptr<const NoisePredictor> base, double delta, FieldKind kind,
                     uint64_t seed, int total_steps);

    Vec eps(const Vec& x, int t, int s, const Condition& cond) const override;
    int dim() const override { return base_->dim(); }

    Vec field(const Vec& x, int t) const;  // u(x, t)
    double delta() const { return delta_; }

private:
    std::shared_ptr<const NoisePredictor> base_;
    double delta_;
    FieldKind kind_;
    int total_steps_;
    std::vector<Vec> wave_dirs_;  // per-coordinate direction a_j
    Vec wave_time_;               // b_j
    Vec wave_phase_;              // c_j
};

// Theorem-harness teacher: predicts a fixed noise vector regardless of input
// ("perfectly informed" about the trial's coupling noise).
class FixedEpsPredictor : public NoisePredictor {
public:
    explicit FixedEpsPredictor(Vec eps) : eps_(std::move(eps)) {}
    Vec eps(const Vec&, int, int, const Condition&) const override { return eps_; }
    int dim() const override { return static_cast<int>(eps_.size()); }

private:
    Vec eps_;
};

enum class FeatureKind { Identity, RandomProjection };

FeatureKind feature_kind_from_string(const std::string& s);
std::string feature_kind_to_string(FeatureKind k);

// Stand-in for a pretrained visual encoder: identity, or a fixed seeded random
// projection followed by tanh. Differentiable; the projection matrix is exposed
// so training can run the map inside the autodiff graph.
class FeatureMap {
public:
    FeatureMap(FeatureKind kind, int in_dim, int out_dim, uint64_t seed);

    Vec apply(const Vec& x) const;
    int in_dim() const { return in_dim_; }
    int out_dim() const { return kind_ == FeatureKind::Identity ? in_dim_ : out_dim_; }
    FeatureKind kind() const { return kind_; }
    const std::vector<double>& projection() const { return proj_; }  // row-major in_dim x out_dim

private:
    FeatureKind kind_;
    int in_dim_;
    int out_dim_;
    std::vector<double> proj_;
};

}  // namespace stdlab
