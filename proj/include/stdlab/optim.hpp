#pragma once

#include <cstdint>

#include "stdlab/params.hpp"

namespace stdlab {

// Adaptive-moment state for one parameter group.
struct AdamState {
    ParamStore m;
    ParamStore v;
    int64_t step = 0;
};

AdamState make_adam_state(const ParamStore& params);

// Standard bias-corrected update: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// theta_minus <- mu * theta_minus + (1 - mu) * theta. Never touched by the optimizer.
void ema_update(ParamStore& theta_minus, const ParamStore& theta, double mu);

}  // namespace stdlab
