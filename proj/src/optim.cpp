#include "stdlab/optim.hpp"

#include <cmath>

namespace stdlab {

AdamState make_adam_state(const ParamStore& params) {
    AdamState st;
    st.m = params.zeros_like();
    st.v = params.zeros_like();
    return st;
}

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: store mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params.entry(i).data;
        const auto& g = grads.entry(i).data;
        auto& m = state.m.entry(i).data;
        auto& v = state.v.entry(i).data;
        if (g.size() != p.size()) throw std::invalid_argument("adam_step: entry shape mismatch");
        for (size_t j = 0; j < p.size(); ++j) {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

void ema_update(ParamStore& theta_minus, const ParamStore& theta, double mu) {
    if (theta_minus.size() != theta.size()) throw std::invalid_argument("ema_update: store mismatch");
    for (size_t i = 0; i < theta.size(); ++i) {
        auto& tm = theta_minus.entry(i).data;
        const auto& t = theta.entry(i).data;
        if (tm.size() != t.size()) throw std::invalid_argument("ema_update: entry shape mismatch");
        for (size_t j = 0; j < t.size(); ++j) tm[j] = mu * tm[j] + (1.0 - mu) * t[j];
    }
}

}  // namespace stdlab
