#pragma once

#include <string>
#include <vector>

#include "stdlab/models.hpp"
#include "stdlab/nets.hpp"
#include "stdlab/schedule.hpp"

namespace stdlab {

enum class RunMode { Std, BaselineCd };
enum class RRule { BelowS, EqualS, AboveS, Zero };

RunMode run_mode_from_string(const std::string& s);
std::string run_mode_to_string(RunMode m);
RRule r_rule_from_string(const std::string& s);
std::string r_rule_to_string(RRule r);

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::LinearBeta;
    int total_steps = 1000;
};

struct TeacherConfig {
    double delta = 0.0;
    FieldKind field = FieldKind::ConstantVector;
    uint64_t seed = 77;
};

struct FeatureConfig {
    FeatureKind kind = FeatureKind::Identity;
    int out_dim = 16;
    uint64_t seed = 101;
};

struct DistillConfig {
    double eta = 0.75;
    double rho = 0.8;
    double gamma = 0.9;
    int bank_capacity = 4;
    double ema_mu = 0.95;
    double lambda_adv = 0.1;
    double omega_min = 1.0;
    double omega_max = 1.0;
    int ode_steps = 50;
    int iterations = 5000;
    int warmup_iterations = 2000;
    int batch_size = 256;
    uint64_t seed = 1;
    RunMode mode = RunMode::Std;
    RRule r_rule = RRule::BelowS;
    bool fixed_omega_per_trajectory = false;
    double lr_student = 1e-3;
    double lr_disc = 1e-3;
    double lr_decay = 0.05;  // final lr fraction reached at the end of the main loop
};

struct EvalConfig {
    int sw_projections = 128;
    int sw_samples = 4096;
    std::vector<int> nfe = {1, 2, 4, 8};
    double omega_eval = 1.0;
    int eval_every = 1000;
    int eval_samples = 1024;
    int checkpoint_every = 0;  // 0 = final checkpoint only
};

struct RunConfig {
    ScheduleConfig schedule;
    GmmSpec gmm;
    TeacherConfig teacher;
    StudentConfig student;  // dim / n_classes are derived from the gmm
    DiscConfig disc;        // in_dim is derived from the feature map
    FeatureConfig features;
    DistillConfig distill;
    EvalConfig eval;
    std::string data_path;  // optional CSV dataset; empty = draw from the gmm

    void finalize();  // fills derived fields and validates everything
};

RunConfig default_config();

// Layered resolution: built-in defaults <- file <- overrides. Unknown keys are
// hard errors. An empty file yields the full defaults.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// "section.key" form, e.g. apply_override(cfg, "distill.rho", "0.2")
void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

// canonical text; parse(serialize(cfg)) == cfg and serialization is idempotent
std::string serialize_config(const RunConfig& cfg);

}  // namespace stdlab
