#include "stdlab/models.hpp"

#include <algorithm>
#include <cmath>

namespace stdlab {

void GmmSpec::validate() const {
    if (weights.empty()) throw std::invalid_argument("gmm: needs at least one component");
    if (means.size() != weights.size() || stdevs.size() != weights.size()) {
        throw std::invalid_argument("gmm: weights/means/stdevs size mismatch");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("gmm: weights must be positive");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw std::invalid_argument("gmm: weights must sum to 1");
    const size_t d = means[0].size();
    if (d == 0) throw std::invalid_argument("gmm: dimension must be >= 1");
    for (const auto& m : means) {
        if (m.size() != d) throw std::invalid_argument("gmm: inconsistent mean dimensions");
    }
    for (double s : stdevs) {
        if (!(s > 0.0)) throw std::invalid_argument("gmm: stdevs must be positive");
    }
}

std::pair<Vec, Condition> gmm_sample(const GmmSpec& spec, const Condition& cond, Rng& rng) {
    int k;
    if (cond.is_null()) {
        double u = rng.uniform();
        double acc = 0.0;
        k = spec.components() - 1;
        for (int i = 0; i < spec.components(); ++i) {
            acc += spec.weights[static_cast<size_t>(i)];
            if (u < acc) {
                k = i;
                break;
            }
        }
    } else {
        if (cond.label >= spec.components()) throw std::invalid_argument("gmm_sample: label out of range");
        k = cond.label;
    }
    const Vec& m = spec.means[static_cast<size_t>(k)];
    const double s = spec.stdevs[static_cast<size_t>(k)];
    Vec x(m.size());
    for (size_t i = 0; i < x.size(); ++i) x[i] = m[i] + s * rng.normal();
    return {std::move(x), Condition::class_label(k)};
}

namespace {

// log N(x; sqrt(abar_t) m_k, v_k I) with v_k = abar_t s_k^2 + 1 - abar_t,
// evaluated for one component; returns (log density, posterior mean factor pieces).
double component_log_density(const GmmSpec& spec, int k, const Vec& x_t, double abar_t) {
    const Vec& m = spec.means[static_cast<size_t>(k)];
    const double sk = spec.stdevs[static_cast<size_t>(k)];
    const double v = abar_t * sk * sk + 1.0 - abar_t;
    const double sa = std::sqrt(abar_t);
    double q = 0.0;
    for (size_t i = 0; i < x_t.size(); ++i) {
        double diff = x_t[i] - sa * m[i];
        q += diff * diff;
    }
    const double d = static_cast<double>(x_t.size());
    return -0.5 * q / v - 0.5 * d * std::log(2.0 * 3.14159265358979323846 * v);
}

}  // namespace

Vec analytic_eps(const GmmSpec& spec, const Vec& x_t, int t, const Condition& cond,
                 const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.total_steps) {
        throw std::invalid_argument("analytic_eps: t must be in [1, T] (singular at t = 0)");
    }
    check_dim(x_t, static_cast<size_t>(spec.dim()), "analytic_eps");
    const double abar = schedule.abar(t);
    const double sa = std::sqrt(abar);
    const double sigma = std::sqrt(1.0 - abar);

    int lo = 0, hi = spec.components();
    if (!cond.is_null()) {
        if (cond.label >= spec.components()) throw std::invalid_argument("analytic_eps: label out of range");
        lo = cond.label;
        hi = cond.label + 1;
    }

    // responsibilities via log-sum-exp
    std::vector<double> logw(static_cast<size_t>(hi - lo));
    double max_lw = -1e308;
    for (int k = lo; k < hi; ++k) {
        double lw = std::log(spec.weights[static_cast<size_t>(k)]) +
                    component_log_density(spec, k, x_t, abar);
        logw[static_cast<size_t>(k - lo)] = lw;
        max_lw = std::max(max_lw, lw);
    }
    double z = 0.0;
    for (double lw : logw) z += std::exp(lw - max_lw);

    // E[x0 | x_t] = sum_k r_k (m_k + (sa s_k^2 / v_k)(x_t - sa m_k))
    Vec ex0(x_t.size(), 0.0);
    for (int k = lo; k < hi; ++k) {
        const double r = std::exp(logw[static_cast<size_t>(k - lo)] - max_lw) / z;
        const Vec& m = spec.means[static_cast<size_t>(k)];
        const double sk = spec.stdevs[static_cast<size_t>(k)];
        const double v = abar * sk * sk + 1.0 - abar;
        const double shrink = sa * sk * sk / v;
        for (size_t i = 0; i < x_t.size(); ++i) {
            ex0[i] += r * (m[i] + shrink * (x_t[i] - sa * m[i]));
        }
    }

    Vec eps(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i) eps[i] = (x_t[i] - sa * ex0[i]) / sigma;
    return eps;
}

double log_marginal_density(const GmmSpec& spec, const Vec& x_t, int t, const Condition& cond,
                            const NoiseSchedule& schedule) {
    const double abar = schedule.abar(t);
    int lo = 0, hi = spec.components();
    double wnorm = 1.0;
    if (!cond.is_null()) {
        lo = cond.label;
        hi = cond.label + 1;
        wnorm = spec.weights[static_cast<size_t>(cond.label)];
    }
    double max_lw = -1e308;
    std::vector<double> lws(static_cast<size_t>(hi - lo));
    for (int k = lo; k < hi; ++k) {
        double lw = std::log(spec.weights[static_cast<size_t>(k)] / wnorm) +
                    component_log_density(spec, k, x_t, abar);
        lws[static_cast<size_t>(k - lo)] = lw;
        max_lw = std::max(max_lw, lw);
    }
    double z = 0.0;
    for (double lw : lws) z += std::exp(lw - max_lw);
    return max_lw + std::log(z);
}

FieldKind field_kind_from_string(const std::string& s) {
    if (s == "constant") return FieldKind::ConstantVector;
    if (s == "sinusoidal") return FieldKind::SeededSinusoidal;
    throw std::invalid_argument("unknown perturbation field kind: " + s);
}

std::string field_kind_to_string(FieldKind k) {
    return k == FieldKind::ConstantVector ? "constant" : "sinusoidal";
}

PerturbedTeacher::PerturbedTeacher(std::shared_ptr<const NoisePredictor> base, double delta,
                                   FieldKind kind, uint64_t seed, int total_steps)
    : base_(std::move(base)), delta_(delta), kind_(kind), total_steps_(total_steps) {
    if (delta_ < 0.0) throw std::invalid_argument("PerturbedTeacher: delta must be >= 0");
    const int d = base_->dim();
    if (kind_ == FieldKind::SeededSinusoidal) {
        Rng rng(seed);
        wave_dirs_.resize(static_cast<size_t>(d));
        wave_time_.resize(static_cast<size_t>(d));
        wave_phase_.resize(static_cast<size_t>(d));
        for (int j = 0; j < d; ++j) {
            wave_dirs_[static_cast<size_t>(j)] = rng.normal_vec(static_cast<size_t>(d));
            wave_time_[static_cast<size_t>(j)] = rng.uniform(0.5, 4.0);
            wave_phase_[static_cast<size_t>(j)] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        }
    }
}

Vec PerturbedTeacher::field(const Vec& x, int t) const {
    const size_t d = static_cast<size_t>(base_->dim());
    Vec u(d, 0.0);
    if (kind_ == FieldKind::ConstantVector) {
        u[0] = 1.0;
        return u;
    }
    const double tn = static_cast<double>(t) / static_cast<double>(total_steps_);
    for (size_t j = 0; j < d; ++j) {
        double arg = wave_phase_[j] + wave_time_[j] * tn;
        const Vec& a = wave_dirs_[j];
        for (size_t i = 0; i < d; ++i) arg += a[i] * x[i];
        u[j] = std::sin(arg);
    }
    return u;
}

Vec PerturbedTeacher::eps(const Vec& x, int t, int s, const Condition& cond) const {
    Vec e = base_->eps(x, t, s, cond);
    if (delta_ == 0.0) return e;
    Vec u = field(x, t);
    for (size_t i = 0; i < e.size(); ++i) e[i] += delta_ * u[i];
    return e;
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "identity") return FeatureKind::Identity;
    if (s == "random-projection") return FeatureKind::RandomProjection;
    throw std::invalid_argument("unknown feature kind: " + s);
}

std::string feature_kind_to_string(FeatureKind k) {
    return k == FeatureKind::Identity ? "identity" : "random-projection";
}

FeatureMap::FeatureMap(FeatureKind kind, int in_dim, int out_dim, uint64_t seed)
    : kind_(kind), in_dim_(in_dim), out_dim_(out_dim) {
    if (in_dim < 1) throw std::invalid_argument("FeatureMap: in_dim must be >= 1");
    if (kind_ == FeatureKind::RandomProjection) {
        if (out_dim < 1) throw std::invalid_argument("FeatureMap: out_dim must be >= 1");
        Rng rng(seed);
        proj_.resize(static_cast<size_t>(in_dim) * static_cast<size_t>(out_dim));
        const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
        for (auto& p : proj_) p = scale * rng.normal();
    }
}

Vec FeatureMap::apply(const Vec& x) const {
    check_dim(x, static_cast<size_t>(in_dim_), "feature_map");
    if (kind_ == FeatureKind::Identity) return x;
    Vec out(static_cast<size_t>(out_dim_), 0.0);
    for (int i = 0; i < in_dim_; ++i) {
        const double xi = x[static_cast<size_t>(i)];
        const double* row = proj_.data() + static_cast<size_t>(i) * static_cast<size_t>(out_dim_);
        for (int j = 0; j < out_dim_; ++j) out[static_cast<size_t>(j)] += xi * row[j];
    }
    for (auto& v : out) v = std::tanh(v);
    return out;
}

}  // namespace stdlab
