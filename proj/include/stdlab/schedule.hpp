#pragma once

#include <string>
#include <vector>

#include "stdlab/common.hpp"

namespace stdlab {

enum class ScheduleKind { LinearBeta, Cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string schedule_kind_to_string(ScheduleKind k);

// Discrete variance-preserving noise schedule. alpha_bar[t] is the squared
// signal coefficient at timestep t; sigma_t = sqrt(1 - alpha_bar[t]).
struct NoiseSchedule {
    int total_steps = 0;  // T
    ScheduleKind kind = ScheduleKind::LinearBeta;
    std::vector<double> alpha_bar;  // size T+1, alpha_bar[0] == 1

    double abar(int t) const { return alpha_bar[static_cast<size_t>(t)]; }
    double sqrt_abar(int t) const { return std::sqrt(abar(t)); }
    double sigma(int t) const { return std::sqrt(1.0 - abar(t)); }

    void validate() const;
};

// Descending solver grid: timesteps[0] = tau, timesteps[N] = 0.
struct StepGrid {
    std::vector<int> timesteps;

    int count() const { return static_cast<int>(timesteps.size()) - 1; }  // N
    int tau() const { return timesteps.front(); }
};

NoiseSchedule build_schedule(ScheduleKind kind, int total_steps);

// tau_eta = round(eta * T), clamped to [1, T]
int tau_eta(const NoiseSchedule& schedule, double eta);

// N+1 integer timesteps from tau down to 0, uniformly spaced (gaps differ by at most 1).
StepGrid uniform_grid(const NoiseSchedule& schedule, int tau, int n_steps);

}  // namespace stdlab
