#include "stdlab/dynamics.hpp"

#include <cmath>

namespace stdlab {

Vec perturb(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& schedule) {
    if (t < 0 || t > schedule.total_steps) throw std::invalid_argument("perturb: t out of range");
    check_dim(eps, x0.size(), "perturb");
    const double a = schedule.sqrt_abar(t);
    const double b = schedule.sigma(t);
    Vec out(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

std::pair<double, double> ddim_coeffs(int t, int s, const NoiseSchedule& schedule) {
    if (s > t || s < 0 || t > schedule.total_steps) {
        throw std::invalid_argument("ddim_coeffs: need 0 <= s <= t <= T");
    }
    const double a = std::sqrt(schedule.abar(s) / schedule.abar(t));
    const double b = schedule.sigma(s) - a * schedule.sigma(t);
    return {a, b};
}

Vec ddim_step(const Vec& x_t, int t, int s, const Vec& eps_pred, const NoiseSchedule& schedule) {
    check_dim(eps_pred, x_t.size(), "ddim_step");
    if (s == t) return x_t;  // zero-length jump, exact
    auto [a, b] = ddim_coeffs(t, s, schedule);
    Vec out(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i) out[i] = a * x_t[i] + b * eps_pred[i];
    return out;
}

Vec cfg_eps(const NoisePredictor& model, const Vec& x, int t, int s, const Condition& cond,
            double omega, SolverCounter* counter) {
    Vec e_cond = model.eps(x, t, s, cond);
    if (counter) counter->model_evals++;
    if (omega == 0.0) return e_cond;
    Vec e_null = model.eps(x, t, s, Condition::null_cond());
    if (counter) counter->model_evals++;
    Vec out(e_cond.size());
    for (size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 + omega) * e_cond[i] - omega * e_null[i];
    }
    return out;
}

Trajectory rollout(const NoisePredictor& model, const Vec& x_tau, const StepGrid& grid,
                   const Condition& cond, double omega, const NoiseSchedule& schedule,
                   SolverCounter* counter) {
    if (grid.timesteps.size() < 2) throw std::invalid_argument("rollout: grid needs at least one step");
    Trajectory traj;
    traj.states.reserve(grid.timesteps.size());
    traj.states.emplace_back(grid.timesteps[0], x_tau);
    Vec x = x_tau;
    for (size_t k = 0; k + 1 < grid.timesteps.size(); ++k) {
        int t = grid.timesteps[k];
        int s = grid.timesteps[k + 1];
        Vec e = cfg_eps(model, x, t, s, cond, omega, counter);
        if (counter) counter->solver_steps++;
        x = ddim_step(x, t, s, e, schedule);
        traj.states.emplace_back(s, x);
    }
    return traj;
}

ResidualPair one_step_residual(const Vec& x0, const Vec& eps, int t, int s,
                               const NoisePredictor& teacher, const NoiseSchedule& schedule) {
    if (s > t) throw std::invalid_argument("one_step_residual: need s <= t");
    Vec x_t = perturb(x0, t, eps, schedule);
    Vec x_s = perturb(x0, s, eps, schedule);
    Vec eps_phi = teacher.eps(x_t, t, s, Condition::null_cond());
    Vec x_hat_s = ddim_step(x_t, t, s, eps_phi, schedule);

    const double c = c_coefficient(t, s, schedule);
    ResidualPair out;
    out.residual.resize(x0.size());
    out.predicted.resize(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) {
        out.residual[i] = x_hat_s[i] - x_s[i];
        out.predicted[i] = c * (eps[i] - eps_phi[i]);
    }
    return out;
}

double c_coefficient(int t, int s, const NoiseSchedule& schedule) {
    if (s > t || s < 0 || t > schedule.total_steps) {
        throw std::invalid_argument("c_coefficient: need 0 <= s <= t <= T");
    }
    const double sa_t = schedule.sqrt_abar(t);
    const double sa_s = schedule.sqrt_abar(s);
    return (sa_s * schedule.sigma(t) - sa_t * schedule.sigma(s)) / sa_t;
}

std::vector<Vec> teacher_cfg_step(const NoisePredictor& teacher, const std::vector<Vec>& x,
                                  const std::vector<int>& t, const std::vector<int>& t_next,
                                  const std::vector<Condition>& conds,
                                  const std::vector<double>& omegas, const NoiseSchedule& schedule,
                                  SolverCounter* counter) {
    std::vector<Vec> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        Vec e_cond = teacher.eps(x[i], t[i], t_next[i], conds[i]);
        Vec e_null = teacher.eps(x[i], t[i], t_next[i], Condition::null_cond());
        Vec e(e_cond.size());
        for (size_t j = 0; j < e.size(); ++j) {
            e[j] = (1.0 + omegas[i]) * e_cond[j] - omegas[i] * e_null[j];
        }
        out[i] = ddim_step(x[i], t[i], t_next[i], e, schedule);
    }
    if (counter) {
        counter->solver_steps += 1;
        counter->model_evals += 2;
    }
    return out;
}

}  // namespace stdlab
