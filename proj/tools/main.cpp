#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stdlab/checkpoint.hpp"
#include "stdlab/config.hpp"
#include "stdlab/csvio.hpp"
#include "stdlab/distill.hpp"
#include "stdlab/eval.hpp"
#include "stdlab/gradcheck.hpp"
#include "stdlab/plot.hpp"

using namespace stdlab;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// exit codes: 0 success, 1 usage, 2 assertion/tolerance failure, 3 I/O
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitTolerance = 2;
constexpr int kExitIo = 3;

std::string run_root() {
    const char* env = std::getenv("STDLAB_RUN_ROOT");
    return env && *env ? env : "runs";
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg = path.empty() ? default_config() : parse_config(path);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("--set expects section.key=value, got '" + kv + "'");
        }
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.finalize();
    return cfg;
}

void write_tool_manifest(const std::string& dir, const std::string& tool,
                         const std::vector<std::string>& artifacts, const RunConfig* cfg,
                         uint64_t seed) {
    nlohmann::json m;
    m["tool_version"] = kToolVersion;
    m["tool"] = tool;
    m["seed"] = seed;
    m["artifacts"] = artifacts;
    if (cfg) m["config"] = serialize_config(*cfg);
    const std::string tmp = dir + "/manifest.json.tmp";
    {
        std::ofstream out(tmp);
        out << m.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, dir + "/manifest.json");
}

std::string tool_dir(const std::string& explicit_dir, const std::string& tool, uint64_t seed) {
    std::string dir = explicit_dir.empty()
                          ? run_root() + "/" + tool + "-seed" + std::to_string(seed)
                          : explicit_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

int cmd_gen_data(const RunConfig& cfg, int64_t n, uint64_t seed, const std::string& out) {
    gen_data(cfg.gmm, static_cast<size_t>(n), seed, out);
    std::printf("wrote %lld samples to %s\n", static_cast<long long>(n), out.c_str());
    return kExitOk;
}

int cmd_distill(RunConfig cfg, const std::string& run_dir, const std::string& resume,
                int iterations_override) {
    TrainState st = resume.empty() ? make_train_state(cfg) : load_train_state(resume);
    if (!resume.empty() && iterations_override >= 0) {
        st.cfg.distill.iterations = iterations_override;
        st.cfg.finalize();
    }
    const std::string dir = tool_dir(run_dir, "distill", st.cfg.distill.seed);
    RunPaths paths;
    RunReport report = run_distillation(st, dir, &paths);
    double final_l_std = report.records.empty() ? 0.0 : report.records.back().l_std;
    std::printf("run complete: %lld iterations, final l_std %.6g, report hash %016llx\n",
                static_cast<long long>(st.iterations_done), final_l_std,
                static_cast<unsigned long long>(report.deterministic_hash()));
    if (!report.snapshots.empty()) {
        const auto& first = report.snapshots.front();
        const auto& last = report.snapshots.back();
        std::printf("consistency gap: %.6g -> %.6g; endpoint sw: %.6g -> %.6g\n",
                    first.consistency_gap, last.consistency_gap, first.sw_distance,
                    last.sw_distance);
    }
    std::printf("artifacts in %s\n", dir.c_str());
    return kExitOk;
}

int cmd_sample(const std::string& checkpoint, int nfe, int64_t n, uint64_t seed,
               const std::string& out) {
    TrainState st = load_train_state(checkpoint);
    Rng rng(seed);
    std::vector<Vec> endpoints;
    std::vector<int> labels;
    const int tau = tau_eta(st.schedule, st.cfg.distill.eta);
    StepGrid grid = uniform_grid(st.schedule, tau, nfe);
    for (int64_t i = 0; i < n; ++i) {
        auto [x0, cond] = gmm_sample(st.cfg.gmm, Condition::null_cond(), rng);
        Vec x = perturb(x0, tau, rng.normal_vec(x0.size()), st.schedule);
        for (size_t k = 0; k + 1 < grid.timesteps.size(); ++k) {
            x = consistency_fn(st.student, x, grid.timesteps[k], grid.timesteps[k + 1], cond,
                               st.schedule);
        }
        endpoints.push_back(std::move(x));
        labels.push_back(cond.label);
    }
    write_points_csv(labels, endpoints, out);
    std::printf("wrote %lld student endpoints (nfe=%d) to %s\n", static_cast<long long>(n), nfe,
                out.c_str());
    return kExitOk;
}

int cmd_teacher_sample(const RunConfig& cfg, int64_t n, uint64_t seed, double omega,
                       const std::string& out) {
    NoiseSchedule sched = build_schedule(cfg.schedule.kind, cfg.schedule.total_steps);
    auto base = std::make_shared<AnalyticTeacher>(cfg.gmm, sched);
    std::shared_ptr<const NoisePredictor> teacher = base;
    if (cfg.teacher.delta > 0.0) {
        teacher = std::make_shared<PerturbedTeacher>(base, cfg.teacher.delta, cfg.teacher.field,
                                                     cfg.teacher.seed, sched.total_steps);
    }
    const int tau = tau_eta(sched, cfg.distill.eta);
    StepGrid grid = uniform_grid(sched, tau, cfg.distill.ode_steps);
    Rng rng(seed);
    std::vector<Vec> endpoints;
    std::vector<int> labels;
    for (int64_t i = 0; i < n; ++i) {
        auto [x0, cond] = gmm_sample(cfg.gmm, Condition::null_cond(), rng);
        Vec x = perturb(x0, tau, rng.normal_vec(x0.size()), sched);
        endpoints.push_back(rollout(*teacher, x, grid, cond, omega, sched).endpoint());
        labels.push_back(cond.label);
    }
    write_points_csv(labels, endpoints, out);
    std::printf("wrote %lld teacher endpoints (%d steps) to %s\n", static_cast<long long>(n),
                cfg.distill.ode_steps, out.c_str());
    return kExitOk;
}

int cmd_verify_theorem(const RunConfig& cfg, int trials, int dim, uint64_t seed,
                       const std::string& out_dir) {
    NoiseSchedule sched = build_schedule(cfg.schedule.kind, cfg.schedule.total_steps);
    std::vector<int> t_values, s_candidates;
    standard_theorem_sweep(sched, t_values, s_candidates);
    TheoremReport rep =
        verify_theorem({0.0, 0.1, 0.3, 1.0}, sched, t_values, s_candidates, trials, dim, seed);

    const std::string dir = tool_dir(out_dir, "verify-theorem", seed);
    const std::string csv = dir + "/theorem_report.csv";
    CsvWriter w(csv);
    w.header({"delta", "t", "s", "abar_t", "abar_s", "c_ts", "max_identity_err",
              "max_residual_norm", "min_residual_norm"});
    for (const auto& r : rep.rows) {
        w.begin_row();
        w.field(r.delta);
        w.field(static_cast<int64_t>(r.t));
        w.field(static_cast<int64_t>(r.s));
        w.field(r.abar_t);
        w.field(r.abar_s);
        w.field(r.c_ts);
        w.field(r.max_identity_err);
        w.field(r.max_residual_norm);
        w.field(r.min_residual_norm);
        w.end_row();
    }
    write_tool_manifest(dir, "verify-theorem", {"theorem_report.csv"}, &cfg, seed);
    std::printf("theorem sweep: %zu rows, max identity error %.3e (tolerance %.0e) -> %s\n",
                rep.rows.size(), rep.max_identity_err, rep.tolerance, rep.pass ? "PASS" : "FAIL");
    std::printf("report: %s\n", csv.c_str());
    return rep.pass ? kExitOk : kExitTolerance;
}

int cmd_eval(const std::string& checkpoint, int64_t n, uint64_t seed, const std::string& out_dir) {
    TrainState st = load_train_state(checkpoint);
    const std::string dir = tool_dir(out_dir, "eval", seed);
    Rng rng(seed);
    EndpointReport rep = endpoint_eval(student_jump(st.student, st.schedule), *st.teacher,
                                       st.cfg.gmm, st.cfg.distill.eta, st.cfg.eval.nfe,
                                       static_cast<int>(n), st.schedule, st.grid,
                                       st.cfg.eval.omega_eval, st.cfg.eval.sw_projections, rng);
    const double gap = consistency_gap(student_jump(st.student, st.schedule), *st.teacher,
                                       st.cfg.gmm, st.cfg.distill.eta, st.schedule, st.grid, 128, 4,
                                       st.cfg.eval.omega_eval, rng);
    const std::string csv = dir + "/endpoint_eval.csv";
    CsvWriter w(csv);
    w.header({"nfe", "sw_distance", "noise_floor", "consistency_gap"});
    for (const auto& row : rep.rows) {
        w.begin_row();
        w.field(static_cast<int64_t>(row.nfe));
        w.field(row.sw_distance);
        w.field(rep.noise_floor);
        w.field(gap);
        w.end_row();
    }
    write_tool_manifest(dir, "eval", {"endpoint_eval.csv"}, &st.cfg, seed);
    std::printf("noise floor %.6g, consistency gap %.6g\n", rep.noise_floor, gap);
    for (const auto& row : rep.rows) {
        std::printf("  nfe=%d  sw=%.6g  (x%.2f floor)\n", row.nfe, row.sw_distance,
                    row.sw_distance / rep.noise_floor);
    }
    std::printf("report: %s\n", csv.c_str());
    return kExitOk;
}

void write_comparison_csv(const ComparisonTable& table, const std::string& path) {
    CsvWriter w(path);
    w.header({"mode", "seed", "delta", "endpoint_sw", "consistency_gap"});
    for (const auto& r : table.rows) {
        w.begin_row();
        w.field(r.mode);
        w.field(static_cast<int64_t>(r.seed));
        w.field(r.delta);
        w.field(r.endpoint_sw);
        w.field(r.consistency_gap);
        w.end_row();
    }
}

int cmd_compare(const RunConfig& cfg, const std::vector<uint64_t>& seeds, double delta,
                const std::string& out_dir) {
    ComparisonTable table = compare_std_cd(cfg, seeds, delta, true);
    const std::string dir = tool_dir(out_dir, "compare", seeds.empty() ? 0 : seeds[0]);
    write_comparison_csv(table, dir + "/comparison.csv");
    write_tool_manifest(dir, "compare", {"comparison.csv"}, &cfg, seeds.empty() ? 0 : seeds[0]);

    const double m_std = table.median_endpoint("std", delta);
    const double m_cd = table.median_endpoint("baseline-cd", delta);
    const int wins = table.wins("std", "baseline-cd", delta);
    std::printf("delta=%.3g: std median %.6g vs baseline-cd median %.6g; std wins %d/%zu seeds\n",
                delta, m_std, m_cd, wins, seeds.size());
    const double c_std = table.median_endpoint("std", 0.0);
    const double c_cd = table.median_endpoint("baseline-cd", 0.0);
    std::printf("delta=0 control: std median %.6g vs baseline-cd median %.6g\n", c_std, c_cd);
    std::printf("table: %s/comparison.csv\n", dir.c_str());
    return kExitOk;
}

int cmd_ablate(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = tool_dir(out_dir, "ablate", cfg.distill.seed);
    auto write_rows = [](const std::vector<AblateRow>& rows, const std::string& path) {
        CsvWriter w(path);
        w.header({"r_rule", "rho", "lambda_adv", "endpoint_sw", "consistency_gap", "final_l_std"});
        for (const auto& r : rows) {
            w.begin_row();
            w.field(r.r_rule);
            w.field(r.rho);
            w.field(r.lambda_adv);
            w.field(r.endpoint_sw);
            w.field(r.consistency_gap);
            w.field(r.final_l_std);
            w.end_row();
        }
    };
    std::printf("r_rule grid (4 runs)...\n");
    write_rows(ablate_r_rules(cfg), dir + "/ablate_r_rule.csv");
    std::printf("rho x lambda grid (9 runs)...\n");
    write_rows(ablate_strength_grid(cfg, {0.0, 0.4, 0.8}, {0.0, 0.1, 0.3}),
               dir + "/ablate_strength.csv");
    write_tool_manifest(dir, "ablate", {"ablate_r_rule.csv", "ablate_strength.csv"}, &cfg,
                        cfg.distill.seed);
    std::printf("tables in %s\n", dir.c_str());
    return kExitOk;
}

int cmd_bank_bench(int iterations, const std::string& out_dir) {
    RunConfig cfg = bank_bench_config();
    BankBenchResult res = bank_bench(cfg, iterations);
    const std::string dir = tool_dir(out_dir, "bank-bench", cfg.distill.seed);
    CsvWriter w(dir + "/bank_bench.csv");
    w.header({"arm", "teacher_steps_per_iter", "wall_ms"});
    w.begin_row();
    w.field(std::string("with-bank"));
    w.field(res.with_bank_steps_per_iter);
    w.field(res.with_bank_wall_ms);
    w.end_row();
    w.begin_row();
    w.field(std::string("no-bank"));
    w.field(res.no_bank_steps_per_iter);
    w.field(res.no_bank_wall_ms);
    w.end_row();
    write_tool_manifest(dir, "bank-bench", {"bank_bench.csv"}, &cfg, cfg.distill.seed);
    std::printf("with bank: %.3f teacher steps/iter, %.1f ms total\n", res.with_bank_steps_per_iter,
                res.with_bank_wall_ms);
    std::printf("no bank:   %.3f teacher steps/iter, %.1f ms total\n", res.no_bank_steps_per_iter,
                res.no_bank_wall_ms);
    std::printf("wall-clock ratio: %.2fx\n", res.wall_ratio);
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed) {
    GradCheckReport rep = run_standard_gradcheck(seed, 5, true);
    std::printf("gradcheck: %llu coordinates, max relative error %.3e -> %s\n",
                static_cast<unsigned long long>(rep.coords_checked), rep.max_rel_err,
                rep.passed ? "PASS" : "FAIL");
    if (!rep.passed) std::printf("worst coordinate: %s\n", rep.worst_coord.c_str());
    return rep.passed ? kExitOk : kExitTolerance;
}

int cmd_plot(const std::string& in, const std::string& out, const std::string& kind,
             const std::string& x, const std::vector<std::string>& ys, const std::string& color) {
    CsvTable t = read_csv(in);
    std::string svg;
    if (kind == "scatter") {
        if (ys.size() != 1) throw std::invalid_argument("scatter needs exactly one --y column");
        svg = render_scatter_svg(t, x, ys[0], color);
    } else if (kind == "line") {
        svg = render_line_svg(t, x, ys);
    } else {
        throw std::invalid_argument("plot kind must be scatter or line");
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("plot: cannot open " + out);
    f << svg;
    std::printf("wrote %s\n", out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-trajectory consistency distillation lab"};
    app.require_subcommand(1);

    std::string config_path, run_dir, resume, out, in, kind = "scatter", x_col, color_col;
    std::vector<std::string> overrides, y_cols;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    uint64_t seed = 1;
    int64_t n = 4096;
    int nfe = 4, trials = 100, dim = 2, iterations = 200, iterations_override = -1;
    double delta = 0.3, omega = 1.0;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (defaults when omitted)");
        sub->add_option("--set", overrides, "override as section.key=value (repeatable)");
    };
    auto add_alias = [&](CLI::App* sub, const char* flag, const char* key, const char* help) {
        sub->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides.push_back(std::string(key) + "=" + v); },
            help);
    };

    auto* sc_gen = app.add_subcommand("gen-data", "draw a labeled dataset CSV from the gmm");
    add_config(sc_gen);
    sc_gen->add_option("--n", n, "number of samples")->default_val(10000);
    sc_gen->add_option("--seed", seed, "rng seed");
    sc_gen->add_option("--out", out, "output CSV path")->required();

    auto* sc_distill = app.add_subcommand("distill", "run the distillation training loop");
    add_config(sc_distill);
    sc_distill->add_option("--run-dir", run_dir, "artifact directory (default under run root)");
    sc_distill->add_option("--resume", resume, "checkpoint to resume from");
    sc_distill->add_option("--iterations", iterations_override,
                           "total iteration target (applies on resume too)");
    add_alias(sc_distill, "--eta", "distill.eta", "denoising strength");
    add_alias(sc_distill, "--rho", "distill.rho", "bank sampling probability");
    add_alias(sc_distill, "--gamma", "distill.gamma", "target-step range rate");
    add_alias(sc_distill, "--seed", "distill.seed", "run seed");
    add_alias(sc_distill, "--mode", "distill.mode", "std | baseline-cd");
    add_alias(sc_distill, "--r-rule", "distill.r_rule", "below-s | equal-s | above-s | zero");
    add_alias(sc_distill, "--lambda-adv", "distill.lambda_adv", "adversarial loss weight");
    add_alias(sc_distill, "--batch-size", "distill.batch_size", "training batch size");

    auto* sc_sample = app.add_subcommand("sample", "few-step student sampling to endpoints CSV");
    sc_sample->add_option("--checkpoint", resume, "trained checkpoint")->required();
    sc_sample->add_option("--nfe", nfe, "number of consistency jumps")->default_val(4);
    sc_sample->add_option("--n", n, "number of samples")->default_val(4096);
    sc_sample->add_option("--seed", seed, "rng seed");
    sc_sample->add_option("--out", out, "output CSV path")->required();

    auto* sc_teacher = app.add_subcommand("teacher-sample", "reference multi-step teacher rollouts");
    add_config(sc_teacher);
    sc_teacher->add_option("--n", n, "number of samples")->default_val(4096);
    sc_teacher->add_option("--seed", seed, "rng seed");
    sc_teacher->add_option("--omega", omega, "guidance scale")->default_val(1.0);
    sc_teacher->add_option("--out", out, "output CSV path")->required();

    auto* sc_theorem = app.add_subcommand("verify-theorem", "one-step identity + divergence sweep");
    add_config(sc_theorem);
    sc_theorem->add_option("--trials", trials, "random couplings per (t, s) pair")->default_val(100);
    sc_theorem->add_option("--dim", dim, "sample dimension")->default_val(2);
    sc_theorem->add_option("--seed", seed, "rng seed");
    sc_theorem->add_option("--out-dir", run_dir, "artifact directory");

    auto* sc_eval = app.add_subcommand("eval", "endpoint distances and consistency gap");
    sc_eval->add_option("--checkpoint", resume, "trained checkpoint")->required();
    sc_eval->add_option("--n", n, "samples per endpoint set")->default_val(4096);
    sc_eval->add_option("--seed", seed, "rng seed");
    sc_eval->add_option("--out-dir", run_dir, "artifact directory");

    auto* sc_compare = app.add_subcommand("compare", "matched std vs baseline-cd grid");
    add_config(sc_compare);
    sc_compare->add_option("--seeds", seeds, "run seeds");
    sc_compare->add_option("--delta", delta, "teacher imperfection")->default_val(0.3);
    sc_compare->add_option("--out-dir", run_dir, "artifact directory");

    auto* sc_ablate = app.add_subcommand("ablate", "r_rule and rho x lambda grids");
    add_config(sc_ablate);
    sc_ablate->add_option("--out-dir", run_dir, "artifact directory");

    auto* sc_bench = app.add_subcommand("bank-bench", "trajectory bank throughput benchmark");
    sc_bench->add_option("--iterations", iterations, "iterations per arm")->default_val(200);
    sc_bench->add_option("--out-dir", run_dir, "artifact directory");

    auto* sc_grad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    sc_grad->add_option("--seed", seed, "rng seed")->default_val(2024);

    auto* sc_plot = app.add_subcommand("plot", "CSV to SVG scatter/line");
    sc_plot->add_option("--in", in, "input CSV")->required();
    sc_plot->add_option("--out", out, "output SVG")->required();
    sc_plot->add_option("--kind", kind, "scatter | line")->default_val("scatter");
    sc_plot->add_option("--x", x_col, "x column")->required();
    sc_plot->add_option("--y", y_cols, "y column(s)")->required();
    sc_plot->add_option("--color", color_col, "label column for scatter colors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sc_gen->parsed()) return cmd_gen_data(load_config(config_path, overrides), n, seed, out);
        if (sc_distill->parsed()) {
            if (resume.empty()) {
                RunConfig cfg = load_config(config_path, overrides);
                if (iterations_override >= 0) {
                    apply_override(cfg, "distill.iterations", std::to_string(iterations_override));
                }
                return cmd_distill(cfg, run_dir, "", -1);
            }
            return cmd_distill(default_config(), run_dir, resume, iterations_override);
        }
        if (sc_sample->parsed()) return cmd_sample(resume, nfe, n, seed, out);
        if (sc_teacher->parsed()) {
            return cmd_teacher_sample(load_config(config_path, overrides), n, seed, omega, out);
        }
        if (sc_theorem->parsed()) {
            return cmd_verify_theorem(load_config(config_path, overrides), trials, dim, seed, run_dir);
        }
        if (sc_eval->parsed()) return cmd_eval(resume, n, seed, run_dir);
        if (sc_compare->parsed()) {
            return cmd_compare(load_config(config_path, overrides), seeds, delta, run_dir);
        }
        if (sc_ablate->parsed()) return cmd_ablate(load_config(config_path, overrides), run_dir);
        if (sc_bench->parsed()) return cmd_bank_bench(iterations, run_dir);
        if (sc_grad->parsed()) return cmd_gradcheck(seed);
        if (sc_plot->parsed()) return cmd_plot(in, out, kind, x_col, y_cols, color_col);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitUsage;
}
