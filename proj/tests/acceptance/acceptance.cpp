// Acceptance suite: every criterion prints one PASS/FAIL line and the binary
// exits nonzero if any requested criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "stdlab/distill.hpp"
#include "stdlab/eval.hpp"
#include "stdlab/gradcheck.hpp"

using namespace stdlab;

namespace {

struct CriterionResult {
    bool pass = false;
    std::string detail;
};

double now_sec() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. One-step identity over the full sweep, all deltas
CriterionResult criterion_theorem_identity() {
    NoiseSchedule sched = build_schedule(ScheduleKind::LinearBeta, 1000);
    std::vector<int> t_values, s_candidates;
    standard_theorem_sweep(sched, t_values, s_candidates);
    TheoremReport rep = verify_theorem({0.0, 0.1, 0.3, 1.0}, sched, t_values, s_candidates,
                                       /*trials=*/100, /*dim=*/2, /*seed=*/2025, 1e-9);
    CriterionResult r;
    r.pass = rep.pass;
    r.detail = fmt("max |residual - predicted| = %.3e over %zu rows (tolerance 1e-9)",
                   rep.max_identity_err, rep.rows.size());
    return r;
}

// ---------------------------------------------------------------------------
// 2. Divergence: positive residuals at delta = 0.3 and exact linear scaling
CriterionResult criterion_trajectory_divergence() {
    NoiseSchedule sched = build_schedule(ScheduleKind::LinearBeta, 1000);
    std::vector<int> t_values, s_candidates;
    standard_theorem_sweep(sched, t_values, s_candidates);
    TheoremReport rep = verify_theorem({0.3, 0.6}, sched, t_values, s_candidates,
                                       /*trials=*/50, /*dim=*/2, /*seed=*/909, 1e-9);
    double min_norm = 1e300;
    double worst_scaling = 0.0;
    for (const auto& row : rep.rows) {
        if (row.delta != 0.3) continue;
        min_norm = std::min(min_norm, row.min_residual_norm);
        for (const auto& other : rep.rows) {
            if (other.delta == 0.6 && other.t == row.t && other.s == row.s) {
                worst_scaling = std::max(
                    worst_scaling, std::fabs(other.max_residual_norm - 2.0 * row.max_residual_norm));
                worst_scaling = std::max(
                    worst_scaling, std::fabs(other.min_residual_norm - 2.0 * row.min_residual_norm));
            }
        }
    }
    CriterionResult r;
    r.pass = min_norm > 0.0 && worst_scaling <= 1e-9;
    r.detail = fmt("min residual norm %.3e (> 0), doubling error %.3e (<= 1e-9)", min_norm,
                   worst_scaling);
    return r;
}

// ---------------------------------------------------------------------------
// 3. Bank fidelity: slot states replay fresh rollouts bit-exactly, N = 50
CriterionResult criterion_bank_fidelity() {
    RunConfig cfg = default_config();
    cfg.distill.rho = 1.0;
    cfg.distill.fixed_omega_per_trajectory = true;
    cfg.distill.bank_capacity = 4;
    cfg.distill.batch_size = 64;
    cfg.distill.ode_steps = 50;
    cfg.distill.seed = 4242;
    cfg.student.widths = {8};
    cfg.student.fourier_freqs = 3;
    cfg.student.class_embed_dim = 2;
    cfg.disc.widths = {6};
    cfg.finalize();
    TrainState st = make_train_state(cfg);

    const int capacity = cfg.distill.bank_capacity;
    std::vector<Trajectory> refs(static_cast<size_t>(capacity));
    std::vector<bool> clean(static_cast<size_t>(capacity), true);
    int trajectories_done = 0;
    int64_t states_checked = 0;
    int mismatches = 0;

    while (trajectories_done < 20) {
        const bool expect_fresh = st.bank.empty();
        train_iteration(st);
        if (expect_fresh) {
            for (int slot = 0; slot < capacity; ++slot) {
                if (!st.bank.slot(slot)) return {false, "bank did not refill after a pop"};
                const BankEntry& e = *st.bank.slot(slot);
                refs[static_cast<size_t>(slot)] =
                    rollout(*st.teacher, st.last_x_in[static_cast<size_t>(slot)], st.grid, e.cond,
                            e.omega, st.schedule);
                clean[static_cast<size_t>(slot)] = true;
            }
        }
        for (int slot = 0; slot < capacity; ++slot) {
            if (!st.bank.slot(slot)) {
                // popped: the trajectory completed all N visits
                if (clean[static_cast<size_t>(slot)]) ++trajectories_done;
                clean[static_cast<size_t>(slot)] = true;
                continue;
            }
            const BankEntry& e = *st.bank.slot(slot);
            const int pos = st.grid_index_of(e.t);
            const Vec& expect = refs[static_cast<size_t>(slot)].states[static_cast<size_t>(pos)].second;
            for (size_t j = 0; j < expect.size(); ++j) {
                if (e.state[j] != expect[j]) {
                    ++mismatches;
                    clean[static_cast<size_t>(slot)] = false;
                }
            }
            ++states_checked;
        }
        if (st.iterations_done > 2000) break;
    }
    CriterionResult r;
    r.pass = mismatches == 0 && trajectories_done >= 20;
    r.detail = fmt("%d trajectories replayed, %lld banked states compared bit-exactly, %d mismatches",
                   trajectories_done, static_cast<long long>(states_checked), mismatches);
    return r;
}

// ---------------------------------------------------------------------------
// 4. Bank throughput on the teacher-dominated benchmark
CriterionResult criterion_bank_throughput() {
    RunConfig cfg = bank_bench_config();
    BankBenchResult res = bank_bench(cfg, 300);
    CriterionResult r;
    const bool steps_ok = res.with_bank_steps_per_iter <= 2.0;
    const bool no_bank_ok = std::fabs(res.no_bank_steps_per_iter - 25.5) <= 3.0;
    const bool ratio_ok = res.wall_ratio >= 5.0;
    r.pass = steps_ok && no_bank_ok && ratio_ok;
    r.detail = fmt("with-bank %.2f steps/iter (<= 2), no-bank %.2f (~25.5), wall ratio %.1fx (>= 5)",
                   res.with_bank_steps_per_iter, res.no_bank_steps_per_iter, res.wall_ratio);
    return r;
}

// ---------------------------------------------------------------------------
// 5. Finite-difference gradient correctness
CriterionResult criterion_gradients() {
    GradCheckReport rep = run_standard_gradcheck(2024, 5);
    CriterionResult r;
    r.pass = rep.passed;
    r.detail = fmt("%llu coordinates, max relative error %.3e (< 1e-4)",
                   static_cast<unsigned long long>(rep.coords_checked), rep.max_rel_err);
    return r;
}

// ---------------------------------------------------------------------------
// 6. Distillation efficacy under the default configuration
CriterionResult criterion_efficacy() {
    RunConfig cfg = default_config();  // eta 0.75, 2-component 2-D gmm, delta 0, 5000 iterations
    TrainState st = make_train_state(cfg);

    while (st.warmup_done < cfg.distill.warmup_iterations) warmup_iteration(st);
    st.target.params() = st.student.params();

    Rng eval_rng_a(derive_seed(cfg.distill.seed, 0xACCE901));
    const double gap_warmup =
        consistency_gap(student_jump(st.student, st.schedule), *st.teacher, cfg.gmm,
                        cfg.distill.eta, st.schedule, st.grid, 128, 4, cfg.eval.omega_eval,
                        eval_rng_a);

    while (st.iterations_done < cfg.distill.iterations) train_iteration(st);

    Rng eval_rng_b(derive_seed(cfg.distill.seed, 0xACCE902));
    const double gap_final =
        consistency_gap(student_jump(st.student, st.schedule), *st.teacher, cfg.gmm,
                        cfg.distill.eta, st.schedule, st.grid, 128, 4, cfg.eval.omega_eval,
                        eval_rng_b);

    Rng eval_rng_c(derive_seed(cfg.distill.seed, 0xACCE903));
    EndpointReport rep = endpoint_eval(student_jump(st.student, st.schedule), *st.teacher, cfg.gmm,
                                       cfg.distill.eta, {4}, cfg.eval.sw_samples, st.schedule,
                                       st.grid, cfg.eval.omega_eval, cfg.eval.sw_projections,
                                       eval_rng_c);
    const double sw4 = rep.rows[0].sw_distance;
    const double gap_ratio = gap_warmup / std::max(gap_final, 1e-300);

    CriterionResult r;
    r.pass = sw4 <= 3.0 * rep.noise_floor && gap_ratio >= 5.0;
    r.detail = fmt("NFE=4 sw %.4g vs floor %.4g (x%.2f <= 3), gap %.4g -> %.4g (x%.1f >= 5)", sw4,
                   rep.noise_floor, sw4 / rep.noise_floor, gap_warmup, gap_final, gap_ratio);
    return r;
}

// ---------------------------------------------------------------------------
// 7. STD vs baseline-CD under an imperfect teacher, matched seeds and budgets
CriterionResult criterion_std_vs_cd() {
    RunConfig cfg = default_config();
    cfg.student.widths = {64, 64};
    cfg.distill.batch_size = 128;
    cfg.distill.warmup_iterations = 700;
    cfg.distill.iterations = 1500;
    cfg.eval.eval_samples = 2048;
    cfg.finalize();

    const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    ComparisonTable table = compare_std_cd(cfg, seeds, 0.3, true);

    std::printf("    %-12s %-6s %-7s %-12s %-12s\n", "mode", "seed", "delta", "endpoint_sw",
                "gap");
    for (const auto& row : table.rows) {
        std::printf("    %-12s %-6llu %-7.2f %-12.6g %-12.6g\n", row.mode.c_str(),
                    static_cast<unsigned long long>(row.seed), row.delta, row.endpoint_sw,
                    row.consistency_gap);
    }

    const int wins = table.wins("std", "baseline-cd", 0.3);
    const double m_std = table.median_endpoint("std", 0.3);
    const double m_cd = table.median_endpoint("baseline-cd", 0.3);
    const double c_std = table.median_endpoint("std", 0.0);
    const double c_cd = table.median_endpoint("baseline-cd", 0.0);

    // control: no mode sweep and medians within 20% of each other
    const int control_wins = table.wins("std", "baseline-cd", 0.0);
    const bool control_ok = (control_wins > 0 && control_wins < 5) ||
                            std::fabs(c_std - c_cd) <= 0.2 * std::max(c_std, c_cd);

    CriterionResult r;
    r.pass = wins >= 3 && control_ok;
    r.detail = fmt("delta=0.3: std median %.4g vs cd %.4g, std wins %d/5 (>= 3); "
                   "control medians %.4g vs %.4g (%s)",
                   m_std, m_cd, wins, c_std, c_cd, control_ok ? "indistinct" : "DISTINCT");
    return r;
}

// ---------------------------------------------------------------------------
// 8. Asymmetric-loss ablation harness + exact hinge examples
CriterionResult criterion_ablation() {
    // the hand unit cases first: exact hinge arithmetic
    FeatureMap ident(FeatureKind::Identity, 1, 0, 1);
    DiscConfig dc;
    dc.in_dim = 1;
    dc.widths = {};
    Discriminator identity_d(dc, 1);
    identity_d.params().at("fc0.w").data = {1.0};
    AdvLossValues sat = adv_loss_values(identity_d, ident, {{-1.0}}, {{1.0}});
    AdvLossValues hand = adv_loss_values(identity_d, ident, {{0.3}}, {{-0.2}});
    const bool hinge_ok = sat.l_d == 0.0 && hand.l_d == 2.5 && hand.l_g == -0.3;

    RunConfig cfg = default_config();
    cfg.student.widths = {64, 64};
    cfg.distill.batch_size = 128;
    cfg.distill.warmup_iterations = 500;
    cfg.distill.iterations = 1000;
    cfg.eval.eval_samples = 2048;
    cfg.teacher.delta = 0.3;
    cfg.finalize();
    std::vector<AblateRow> rows = ablate_r_rules(cfg);

    std::printf("    %-9s %-6s %-7s %-12s %-12s %-12s\n", "r_rule", "rho", "lambda", "endpoint_sw",
                "gap", "final_l_std");
    for (const auto& row : rows) {
        std::printf("    %-9s %-6.2f %-7.2f %-12.6g %-12.6g %-12.6g\n", row.r_rule.c_str(), row.rho,
                    row.lambda_adv, row.endpoint_sw, row.consistency_gap, row.final_l_std);
    }
    bool complete = rows.size() == 4;
    for (const char* want : {"below-s", "equal-s", "above-s", "zero"}) {
        bool found = false;
        for (const auto& row : rows) found = found || row.r_rule == want;
        complete = complete && found;
    }

    CriterionResult r;
    r.pass = hinge_ok && complete;
    r.detail = fmt("hinge cases exact (L_D=0 satisfied, L_D=2.5 / L_G=-0.3 hand), %zu/4 r_rules ran",
                   rows.size());
    return r;
}

// ---------------------------------------------------------------------------
// 9. Determinism and checkpoint persistence
CriterionResult criterion_determinism() {
    namespace fs = std::filesystem;
    RunConfig cfg = default_config();
    cfg.distill.warmup_iterations = 100;
    cfg.distill.iterations = 200;
    cfg.distill.batch_size = 64;
    cfg.student.widths = {32, 32};
    cfg.eval.eval_samples = 256;
    cfg.eval.eval_every = 0;
    cfg.finalize();

    fs::remove_all("acceptance_runs");
    TrainState st1 = make_train_state(cfg);
    TrainState st2 = make_train_state(cfg);
    RunPaths p1, p2;
    RunReport r1 = run_distillation(st1, "acceptance_runs/a", &p1);
    RunReport r2 = run_distillation(st2, "acceptance_runs/b", &p2);

    bool reports_equal = r1.deterministic_hash() == r2.deterministic_hash() &&
                         r1.records.size() == r2.records.size();
    for (size_t i = 0; reports_equal && i < r1.records.size(); ++i) {
        reports_equal = r1.records[i].l_std == r2.records[i].l_std &&
                        r1.records[i].l_adv_g == r2.records[i].l_adv_g &&
                        r1.records[i].l_adv_d == r2.records[i].l_adv_d &&
                        r1.records[i].teacher_solver_calls == r2.records[i].teacher_solver_calls &&
                        r1.records[i].bank_occupancy == r2.records[i].bank_occupancy;
    }

    // save -> load -> save byte identity
    TrainState reloaded = load_train_state(p1.checkpoint);
    save_train_checkpoint(reloaded, "acceptance_runs/resaved.stdl");
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    const bool bytes_equal = slurp(p1.checkpoint) == slurp("acceptance_runs/resaved.stdl") &&
                             !slurp(p1.checkpoint).empty();

    CriterionResult r;
    r.pass = reports_equal && bytes_equal;
    r.detail = fmt("report hash %016llx equal across runs: %s; checkpoint round trip: %s",
                   static_cast<unsigned long long>(r1.deterministic_hash()),
                   reports_equal ? "yes" : "NO", bytes_equal ? "byte-identical" : "MISMATCH");
    return r;
}

struct Criterion {
    int id;
    const char* name;
    std::function<CriterionResult()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "theorem one-step identity", criterion_theorem_identity},
        {2, "trajectory divergence scaling", criterion_trajectory_divergence},
        {3, "bank fidelity (bit-exact resumable rollouts)", criterion_bank_fidelity},
        {4, "bank throughput", criterion_bank_throughput},
        {5, "gradient correctness", criterion_gradients},
        {6, "distillation efficacy (default config)", criterion_efficacy},
        {7, "std vs baseline-cd (imperfect teacher)", criterion_std_vs_cd},
        {8, "asymmetric-loss ablation harness", criterion_ablation},
        {9, "determinism and persistence", criterion_determinism},
    };

    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
        }
    }

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        const double t0 = now_sec();
        CriterionResult res;
        try {
            res = c.run();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        const double dt = now_sec() - t0;
        std::printf("criterion %d [%s] %s: %s (%.1f s)\n", c.id, res.pass ? "PASS" : "FAIL", c.name,
                    res.detail.c_str(), dt);
        std::fflush(stdout);
        if (!res.pass) ++failures;
    }
    return failures == 0 ? 0 : 2;
}
