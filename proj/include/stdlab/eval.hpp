#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stdlab/common.hpp"
#include "stdlab/config.hpp"
#include "stdlab/distill.hpp"
#include "stdlab/dynamics.hpp"
#include "stdlab/models.hpp"
#include "stdlab/nets.hpp"
#include "stdlab/rng.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

// Average over random unit directions of the 1-D 2-Wasserstein distance between
// the projected empirical distributions (sorted-match formula). Requires |a| == |b|.
double sliced_wasserstein(const std::vector<Vec>& a, const std::vector<Vec>& b, int projections,
                          Rng& rng);

struct TheoremRow {
    double delta = 0.0;
    int t = 0;
    int s = 0;
    double abar_t = 0.0;
    double abar_s = 0.0;
    double c_ts = 0.0;
    double max_identity_err = 0.0;
    double max_residual_norm = 0.0;
    double min_residual_norm = 0.0;
};

struct TheoremReport {
    std::vector<TheoremRow> rows;
    double max_identity_err = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
};

// Sweeps one_step_residual over random (x0, eps) couplings with a perfectly
// informed teacher perturbed by a constant-field delta. Asserts the one-step
// identity |residual - predicted| <= tolerance on every trial.
TheoremReport verify_theorem(const std::vector<double>& deltas, const NoiseSchedule& schedule,
                             const std::vector<int>& t_values, const std::vector<int>& s_candidates,
                             int trials, int dim, uint64_t seed, double tolerance = 1e-9);

// standard sweep: t in {0.1T .. 0.9T}, s on a uniform grid below 0.9T
void standard_theorem_sweep(const NoiseSchedule& schedule, std::vector<int>& t_values,
                            std::vector<int>& s_candidates);

// generic consistency-sampler jump (students and oracles share this surface)
using JumpFn = std::function<Vec(const Vec& x, int t, int s, const Condition& cond)>;

JumpFn student_jump(const StudentNet& student, const NoiseSchedule& schedule);

// one teacher-informed DDIM jump; NFE=N sampling with this reproduces the rollout
JumpFn teacher_jump(const NoisePredictor& teacher, const NoiseSchedule& schedule);

// Self-consistency along single teacher trajectories from tau_eta: mean over
// trajectory pairs (t' < t) of || f(x_t, t, 0) - f(x_t', t', 0) ||.
double consistency_gap(const JumpFn& jump, const NoisePredictor& teacher, const GmmSpec& gmm,
                       double eta, const NoiseSchedule& schedule, const StepGrid& grid,
                       int n_trajectories, int pairs_per_trajectory, double omega_eval, Rng& rng);

// equal-jump consistency sampling from partially noised data; returns endpoints
std::vector<Vec> sample_endpoints(const JumpFn& jump, const GmmSpec& gmm, double eta, int nfe,
                                  const NoiseSchedule& schedule, int n, Rng& rng);

// reference N-step teacher rollouts from the same construction
std::vector<Vec> teacher_endpoints(const NoisePredictor& teacher, const GmmSpec& gmm, double eta,
                                   const StepGrid& grid, int n, double omega,
                                   const NoiseSchedule& schedule, Rng& rng,
                                   SolverCounter* counter = nullptr);

struct EndpointRow {
    int nfe = 0;
    double sw_distance = 0.0;
};

struct EndpointReport {
    std::vector<EndpointRow> rows;
    double noise_floor = 0.0;  // teacher-vs-teacher resampling distance
};

EndpointReport endpoint_eval(const JumpFn& jump, const NoisePredictor& teacher,
                             const GmmSpec& gmm, double eta, const std::vector<int>& nfes, int n,
                             const NoiseSchedule& schedule, const StepGrid& grid, double omega_eval,
                             int sw_projections, Rng& rng);

struct CompareRow {
    std::string mode;
    uint64_t seed = 0;
    double delta = 0.0;
    double endpoint_sw = 0.0;
    double consistency_gap = 0.0;
};

struct ComparisonTable {
    std::vector<CompareRow> rows;

    double median_endpoint(const std::string& mode, double delta) const;
    int wins(const std::string& mode_a, const std::string& mode_b, double delta) const;
};

// Matched-seed, matched-budget std vs baseline-cd comparison at the given
// teacher imperfection; include_control adds delta = 0 rows.
ComparisonTable compare_std_cd(const RunConfig& base, const std::vector<uint64_t>& seeds,
                               double delta, bool include_control);

struct AblateRow {
    std::string r_rule;
    double rho = 0.0;
    double lambda_adv = 0.0;
    double endpoint_sw = 0.0;
    double consistency_gap = 0.0;
    double final_l_std = 0.0;
};

std::vector<AblateRow> ablate_r_rules(const RunConfig& base);
std::vector<AblateRow> ablate_strength_grid(const RunConfig& base, const std::vector<double>& rhos,
                                            const std::vector<double>& lambdas);

struct BankBenchResult {
    double with_bank_steps_per_iter = 0.0;
    double no_bank_steps_per_iter = 0.0;
    double with_bank_wall_ms = 0.0;
    double no_bank_wall_ms = 0.0;
    double wall_ratio = 0.0;
};

// Identical workloads modulo trajectory provenance; the config should be
// teacher-dominated for the wall-clock ratio to mean anything.
BankBenchResult bank_bench(const RunConfig& cfg, int iterations);
RunConfig bank_bench_config();

// trains in memory (warmup + main loop), no artifacts
RunReport train_in_memory(TrainState& st);

}  // namespace stdlab
