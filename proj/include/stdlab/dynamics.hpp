#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stdlab/common.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

// Anything that predicts noise from a state. Teachers ignore the jump target s;
// the student conditions on it.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual Vec eps(const Vec& x, int t, int s, const Condition& cond) const = 0;
    virtual int dim() const = 0;
};

// Reverse-trajectory record, descending timestep.
struct Trajectory {
    std::vector<std::pair<int, Vec>> states;

    const Vec& at_index(size_t k) const { return states[k].second; }
    int timestep_at(size_t k) const { return states[k].first; }
    const Vec& endpoint() const { return states.back().second; }
};

// Counts teacher work. One solver step = one CFG update = two model evaluations.
struct SolverCounter {
    int64_t solver_steps = 0;
    int64_t model_evals = 0;
};

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Vec perturb(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& schedule);

// Deterministic DDIM update from t to s given a noise prediction (sigma_t = 0).
// ddim_step(x, t, t, .) returns x bit-exactly.
Vec ddim_step(const Vec& x_t, int t, int s, const Vec& eps_pred, const NoiseSchedule& schedule);

// Coefficients (a, b) with ddim_step(x, t, s, e) = a*x + b*e. b vanishes exactly at s == t.
std::pair<double, double> ddim_coeffs(int t, int s, const NoiseSchedule& schedule);

// (1 + omega) * eps(x, cond) - omega * eps(x, null)
Vec cfg_eps(const NoisePredictor& model, const Vec& x, int t, int s, const Condition& cond,
            double omega, SolverCounter* counter = nullptr);

// Iterated cfg_eps + ddim_step along a descending grid; N+1 states including the start.
Trajectory rollout(const NoisePredictor& model, const Vec& x_tau, const StepGrid& grid,
                   const Condition& cond, double omega, const NoiseSchedule& schedule,
                   SolverCounter* counter = nullptr);

// C_{t,s} = (sqrt(abar_s) sqrt(1-abar_t) - sqrt(abar_t) sqrt(1-abar_s)) / sqrt(abar_t)
double c_coefficient(int t, int s, const NoiseSchedule& schedule);

// One-step displacement identity under same-noise coupling:
//   residual  = ddim_step(x_t, t, s, eps_phi(x_t)) - x_s
//   predicted = C_{t,s} * (eps - eps_phi(x_t))
// The two sides agree to floating-point precision for any teacher.
struct ResidualPair {
    Vec residual;
    Vec predicted;
};
ResidualPair one_step_residual(const Vec& x0, const Vec& eps, int t, int s,
                               const NoisePredictor& teacher, const NoiseSchedule& schedule);

// Batched CFG teacher step: advances each state x[i] from t[i] to t_next[i] under
// guidance omega[i]. Counts as one solver step (two model evaluations).
std::vector<Vec> teacher_cfg_step(const NoisePredictor& teacher, const std::vector<Vec>& x,
                                  const std::vector<int>& t, const std::vector<int>& t_next,
                                  const std::vector<Condition>& conds,
                                  const std::vector<double>& omegas, const NoiseSchedule& schedule,
                                  SolverCounter* counter = nullptr);

}  // namespace stdlab
