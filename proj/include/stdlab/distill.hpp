#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stdlab/bank.hpp"
#include "stdlab/config.hpp"
#include "stdlab/csvio.hpp"
#include "stdlab/dynamics.hpp"
#include "stdlab/models.hpp"
#include "stdlab/nets.hpp"
#include "stdlab/optim.hpp"
#include "stdlab/rng.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

struct IterationRecord {
    int64_t iteration = 0;
    double l_std = 0.0;
    double l_adv_g = 0.0;
    double l_adv_d = 0.0;
    int64_t teacher_solver_calls = 0;
    int bank_occupancy = 0;
    double wall_ms = 0.0;
};

struct EvalSnapshot {
    int64_t iteration = 0;
    double consistency_gap = 0.0;
    double sw_distance = 0.0;
};

struct RunReport {
    std::vector<double> warmup_losses;
    std::vector<IterationRecord> records;
    std::vector<EvalSnapshot> snapshots;

    // order-sensitive digest of every deterministic field; wall_ms is excluded
    // because physical timing is not reproducible
    uint64_t deterministic_hash() const;
};

// One independent substream per purpose so that std and baseline-cd modes
// consume identical draws for the steps they share.
struct RngBundle {
    Rng data, omega, noise, target_s, adv, branch, bank, cd_t, warmup, eval;
    explicit RngBundle(uint64_t master);
};

// s ~ U[(1-gamma) t, t], snapped down to the nearest grid timestep <= the draw.
int sample_target_s(int t, double gamma, const StepGrid& grid, Rng& rng);

// real-sample noise level for the asymmetric adversarial loss
int draw_r(RRule rule, int s, const StepGrid& grid, Rng& rng);

// || f_theta(x_in, t_in, s) - f_theta_minus(x_teacher, t_n, s) ||^2 for one pair
double std_loss_value(const StudentNet& student, const StudentNet& target_net, const Vec& x_in,
                      int t_in, const Vec& x_teacher, int t_n, int s, const Condition& cond,
                      const NoiseSchedule& schedule);

struct AdvLossValues {
    double l_g = 0.0;
    double l_d = 0.0;
};

// Hinge losses over already-prepared batches:
//   L_G = -mean D(F(fake)),  L_D = mean max(0, 1 + D(F(fake))) + mean max(0, 1 - D(F(real)))
AdvLossValues adv_loss_values(const Discriminator& disc, const FeatureMap& fmap,
                              const std::vector<Vec>& fakes, const std::vector<Vec>& reals_noised);

struct TrainState {
    RunConfig cfg;
    NoiseSchedule schedule;
    StepGrid grid;
    int tau = 0;
    std::shared_ptr<const NoisePredictor> teacher;
    FeatureMap fmap;
    StudentNet student;
    StudentNet target;  // holds theta_minus; updated only by ema_update
    Discriminator disc;
    AdamState adam_student;
    AdamState adam_disc;
    TrajectoryBank bank;
    RngBundle rngs;
    Dataset dataset;  // empty = draw from the gmm spec
    SolverCounter counter;
    int64_t iterations_done = 0;
    int64_t warmup_done = 0;

    // last-iteration trace, used by the mode-alignment and bank-fidelity tests
    std::vector<Vec> last_data_x0;  // raw dataset draws, consumed in every mode
    std::vector<Vec> last_x0;       // per-member clean origins actually used
    std::vector<Vec> last_x_in;
    double last_omega = 0.0;

    int grid_index_of(int timestep) const;
    std::pair<Vec, Condition> draw_data();
};

TrainState make_train_state(const RunConfig& cfg);

// One Algorithm-1 iteration (std mode) or one forward-noised baseline iteration
// (baseline-cd mode), per cfg.distill.mode. Exactly one optimizer step each for
// theta and psi, exactly one teacher solver invocation.
IterationRecord train_iteration(TrainState& st);

double warmup_iteration(TrainState& st);  // returns the regression loss

// Bench arm for the bank comparison: the training input is reproduced by a
// fresh batched rollout from tau_eta down to a uniformly random grid depth.
// Same losses and updates as train_iteration, no bank interaction.
IterationRecord no_bank_iteration(TrainState& st);

struct RunPaths {
    std::string run_dir;
    std::string checkpoint;
    std::string metrics_csv;
    std::string snapshots_csv;
    std::string warmup_csv;
    std::string config_file;
    std::string manifest;
};

// Full orchestration: warmup, main loop with periodic snapshots/checkpoints,
// final checkpoint, metrics CSV, manifest. Deterministic given cfg.distill.seed.
RunReport run_distillation(TrainState& st, const std::string& run_dir, RunPaths* paths_out = nullptr);

// Restore a TrainState from a checkpoint written by run_distillation.
TrainState load_train_state(const std::string& checkpoint_path);

void save_train_checkpoint(const TrainState& st, const std::string& path);

}  // namespace stdlab
