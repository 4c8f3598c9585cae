#include "stdlab/schedule.hpp"

#include <cmath>

namespace stdlab {

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear-beta") return ScheduleKind::LinearBeta;
    if (s == "cosine") return ScheduleKind::Cosine;
    throw std::invalid_argument("unknown schedule kind: " + s);
}

std::string schedule_kind_to_string(ScheduleKind k) {
    return k == ScheduleKind::LinearBeta ? "linear-beta" : "cosine";
}

void NoiseSchedule::validate() const {
    if (total_steps < 2) throw std::invalid_argument("schedule: total_steps must be >= 2");
    if (alpha_bar.size() != static_cast<size_t>(total_steps) + 1) {
        throw std::invalid_argument("schedule: alpha_bar must have T+1 entries");
    }
    if (alpha_bar[0] != 1.0) throw std::invalid_argument("schedule: alpha_bar[0] must be exactly 1");
    for (int t = 1; t <= total_steps; ++t) {
        double a = alpha_bar[static_cast<size_t>(t)];
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("schedule: alpha_bar out of (0,1]");
        if (!(a < alpha_bar[static_cast<size_t>(t) - 1])) {
            throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
        }
    }
}

NoiseSchedule build_schedule(ScheduleKind kind, int total_steps) {
    if (total_steps < 2) throw std::invalid_argument("build_schedule: total_steps must be >= 2");

    NoiseSchedule s;
    s.total_steps = total_steps;
    s.kind = kind;
    s.alpha_bar.resize(static_cast<size_t>(total_steps) + 1);
    s.alpha_bar[0] = 1.0;

    if (kind == ScheduleKind::LinearBeta) {
        // per-step beta rising linearly from 1e-4 to 0.02
        const double beta_lo = 1e-4, beta_hi = 0.02;
        double prod = 1.0;
        for (int t = 1; t <= total_steps; ++t) {
            double beta = beta_lo + (beta_hi - beta_lo) * static_cast<double>(t - 1) /
                                        static_cast<double>(total_steps - 1);
            prod *= 1.0 - beta;
            s.alpha_bar[static_cast<size_t>(t)] = prod;
        }
    } else {
        // squared-cosine profile, realized through clipped per-step betas so the
        // cumulative product stays strictly positive at t = T
        const double offset = 0.008;
        auto f = [&](double t) {
            double a = (t / total_steps + offset) / (1.0 + offset) * (3.14159265358979323846 / 2.0);
            double c = std::cos(a);
            return c * c;
        };
        const double f0 = f(0.0);
        double prev = 1.0;
        double prod = 1.0;
        for (int t = 1; t <= total_steps; ++t) {
            double target = f(static_cast<double>(t)) / f0;
            double beta = 1.0 - target / prev;
            beta = std::min(beta, 0.999);
            prod *= 1.0 - beta;
            prev = target;
            s.alpha_bar[static_cast<size_t>(t)] = prod;
        }
    }

    s.validate();
    return s;
}

int tau_eta(const NoiseSchedule& schedule, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("tau_eta: eta must be in (0, 1]");
    }
    long long t = std::llround(eta * schedule.total_steps);
    if (t < 1) t = 1;
    if (t > schedule.total_steps) t = schedule.total_steps;
    return static_cast<int>(t);
}

StepGrid uniform_grid(const NoiseSchedule& schedule, int tau, int n_steps) {
    if (tau < 1 || tau > schedule.total_steps) throw std::invalid_argument("uniform_grid: tau out of range");
    if (n_steps < 1 || n_steps > tau) {
        throw std::invalid_argument("uniform_grid: need 1 <= N <= tau");
    }
    StepGrid g;
    g.timesteps.resize(static_cast<size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) {
        g.timesteps[static_cast<size_t>(k)] =
            static_cast<int>(std::llround(static_cast<double>(tau) * (n_steps - k) / n_steps));
    }
    g.timesteps.front() = tau;
    g.timesteps.back() = 0;
    return g;
}

}  // namespace stdlab
