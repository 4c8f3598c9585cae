#include "stdlab/config.hpp"

#include <fstream>
#include <sstream>

#include "stdlab/csvio.hpp"

namespace stdlab {

RunMode run_mode_from_string(const std::string& s) {
    if (s == "std") return RunMode::Std;
    if (s == "baseline-cd") return RunMode::BaselineCd;
    throw std::invalid_argument("unknown mode: " + s + " (want std | baseline-cd)");
}

std::string run_mode_to_string(RunMode m) { return m == RunMode::Std ? "std" : "baseline-cd"; }

RRule r_rule_from_string(const std::string& s) {
    if (s == "below-s") return RRule::BelowS;
    if (s == "equal-s") return RRule::EqualS;
    if (s == "above-s") return RRule::AboveS;
    if (s == "zero") return RRule::Zero;
    throw std::invalid_argument("unknown r_rule: " + s + " (want below-s | equal-s | above-s | zero)");
}

std::string r_rule_to_string(RRule r) {
    switch (r) {
        case RRule::BelowS: return "below-s";
        case RRule::EqualS: return "equal-s";
        case RRule::AboveS: return "above-s";
        default: return "zero";
    }
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return static_cast<int>(x);
    } catch (...) {
        throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return static_cast<uint64_t>(x);
    } catch (...) {
        throw std::invalid_argument("config: bad unsigned integer for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& item : split(v, ',')) out.push_back(to_int(key, item));
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    return out;
}

// semicolon-separated vectors of comma-separated coordinates
std::vector<Vec> to_mean_list(const std::string& key, const std::string& v) {
    std::vector<Vec> out;
    for (const auto& group : split(v, ';')) out.push_back(to_double_list(key, group));
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += format_double(v[i]);
    }
    return s;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

void set_key(RunConfig& c, const std::string& section, const std::string& key, const std::string& value) {
    const std::string k = section + "." + key;
    if (section == "schedule") {
        if (key == "kind") c.schedule.kind = schedule_kind_from_string(value);
        else if (key == "total_steps") c.schedule.total_steps = to_int(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [schedule]");
    } else if (section == "gmm") {
        if (key == "weights") c.gmm.weights = to_double_list(k, value);
        else if (key == "means") c.gmm.means = to_mean_list(k, value);
        else if (key == "stdevs") c.gmm.stdevs = to_double_list(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [gmm]");
    } else if (section == "teacher") {
        if (key == "delta") c.teacher.delta = to_double(k, value);
        else if (key == "field") c.teacher.field = field_kind_from_string(value);
        else if (key == "seed") c.teacher.seed = to_u64(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [teacher]");
    } else if (section == "student") {
        if (key == "widths") c.student.widths = to_int_list(k, value);
        else if (key == "activation") c.student.activation = value;
        else if (key == "fourier_freqs") c.student.fourier_freqs = to_int(k, value);
        else if (key == "class_embed_dim") c.student.class_embed_dim = to_int(k, value);
        else if (key == "condition_on_s") c.student.condition_on_s = to_bool(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [student]");
    } else if (section == "disc") {
        if (key == "widths") c.disc.widths = to_int_list(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [disc]");
    } else if (section == "features") {
        if (key == "kind") c.features.kind = feature_kind_from_string(value);
        else if (key == "out_dim") c.features.out_dim = to_int(k, value);
        else if (key == "seed") c.features.seed = to_u64(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [features]");
    } else if (section == "distill") {
        if (key == "eta") c.distill.eta = to_double(k, value);
        else if (key == "rho") c.distill.rho = to_double(k, value);
        else if (key == "gamma") c.distill.gamma = to_double(k, value);
        else if (key == "bank_capacity") c.distill.bank_capacity = to_int(k, value);
        else if (key == "ema_mu") c.distill.ema_mu = to_double(k, value);
        else if (key == "lambda_adv") c.distill.lambda_adv = to_double(k, value);
        else if (key == "omega_min") c.distill.omega_min = to_double(k, value);
        else if (key == "omega_max") c.distill.omega_max = to_double(k, value);
        else if (key == "ode_steps") c.distill.ode_steps = to_int(k, value);
        else if (key == "iterations") c.distill.iterations = to_int(k, value);
        else if (key == "warmup_iterations") c.distill.warmup_iterations = to_int(k, value);
        else if (key == "batch_size") c.distill.batch_size = to_int(k, value);
        else if (key == "seed") c.distill.seed = to_u64(k, value);
        else if (key == "mode") c.distill.mode = run_mode_from_string(value);
        else if (key == "r_rule") c.distill.r_rule = r_rule_from_string(value);
        else if (key == "fixed_omega_per_trajectory") c.distill.fixed_omega_per_trajectory = to_bool(k, value);
        else if (key == "lr_student") c.distill.lr_student = to_double(k, value);
        else if (key == "lr_disc") c.distill.lr_disc = to_double(k, value);
        else if (key == "lr_decay") c.distill.lr_decay = to_double(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [distill]");
    } else if (section == "eval") {
        if (key == "sw_projections") c.eval.sw_projections = to_int(k, value);
        else if (key == "sw_samples") c.eval.sw_samples = to_int(k, value);
        else if (key == "nfe") c.eval.nfe = to_int_list(k, value);
        else if (key == "omega_eval") c.eval.omega_eval = to_double(k, value);
        else if (key == "eval_every") c.eval.eval_every = to_int(k, value);
        else if (key == "eval_samples") c.eval.eval_samples = to_int(k, value);
        else if (key == "checkpoint_every") c.eval.checkpoint_every = to_int(k, value);
        else throw std::invalid_argument("config: unknown key '" + key + "' in [eval]");
    } else if (section == "data") {
        if (key == "path") c.data_path = value;
        else throw std::invalid_argument("config: unknown key '" + key + "' in [data]");
    } else {
        throw std::invalid_argument("config: unknown section [" + section + "]");
    }
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    c.gmm.weights = {0.5, 0.5};
    c.gmm.means = {{-2.0, 0.0}, {2.0, 0.0}};
    c.gmm.stdevs = {0.6, 0.6};
    c.finalize();
    return c;
}

void RunConfig::finalize() {
    gmm.validate();
    student.dim = gmm.dim();
    student.n_classes = gmm.components();
    disc.in_dim = features.kind == FeatureKind::Identity ? gmm.dim() : features.out_dim;

    if (schedule.total_steps < 2) throw std::invalid_argument("config: schedule.total_steps must be >= 2");
    if (teacher.delta < 0.0) throw std::invalid_argument("config: teacher.delta must be >= 0");
    if (features.out_dim < 1) throw std::invalid_argument("config: features.out_dim must be >= 1");
    for (int w : student.widths) {
        if (w < 1) throw std::invalid_argument("config: student.widths must be positive");
    }
    for (int w : disc.widths) {
        if (w < 1) throw std::invalid_argument("config: disc.widths must be positive");
    }
    if (student.fourier_freqs < 1) throw std::invalid_argument("config: student.fourier_freqs must be >= 1");
    if (student.class_embed_dim < 1) throw std::invalid_argument("config: student.class_embed_dim must be >= 1");

    const auto& d = distill;
    if (!(d.eta > 0.0 && d.eta <= 1.0)) throw std::invalid_argument("config: distill.eta must be in (0, 1]");
    if (!(d.rho >= 0.0 && d.rho <= 1.0)) throw std::invalid_argument("config: distill.rho must be in [0, 1]");
    if (!(d.gamma >= 0.0 && d.gamma <= 1.0)) throw std::invalid_argument("config: distill.gamma must be in [0, 1]");
    if (d.bank_capacity < 1) throw std::invalid_argument("config: distill.bank_capacity must be >= 1");
    if (!(d.ema_mu >= 0.0 && d.ema_mu <= 1.0)) throw std::invalid_argument("config: distill.ema_mu must be in [0, 1]");
    if (d.lambda_adv < 0.0) throw std::invalid_argument("config: distill.lambda_adv must be >= 0");
    if (d.omega_min > d.omega_max) throw std::invalid_argument("config: need omega_min <= omega_max");
    if (d.ode_steps < 1) throw std::invalid_argument("config: distill.ode_steps must be >= 1");
    if (d.iterations < 0 || d.warmup_iterations < 0) {
        throw std::invalid_argument("config: iteration counts must be >= 0");
    }
    if (d.batch_size < 1) throw std::invalid_argument("config: distill.batch_size must be >= 1");
    if (!(d.lr_student > 0.0 && d.lr_disc > 0.0)) throw std::invalid_argument("config: learning rates must be > 0");
    if (!(d.lr_decay >= 0.0 && d.lr_decay <= 1.0)) throw std::invalid_argument("config: distill.lr_decay must be in [0, 1]");

    if (eval.sw_projections < 1 || eval.sw_samples < 1 || eval.eval_samples < 1) {
        throw std::invalid_argument("config: eval sizes must be >= 1");
    }
    for (int n : eval.nfe) {
        if (n < 1) throw std::invalid_argument("config: eval.nfe entries must be >= 1");
    }
    if (eval.eval_every < 0 || eval.checkpoint_every < 0) {
        throw std::invalid_argument("config: eval cadences must be >= 0");
    }

    // the solver grid must fit below tau_eta
    NoiseSchedule sched = build_schedule(schedule.kind, schedule.total_steps);
    int tau = tau_eta(sched, d.eta);
    if (d.ode_steps > tau) {
        throw std::invalid_argument("config: distill.ode_steps exceeds tau_eta = " + std::to_string(tau));
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig c = default_config();
    std::stringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("config: malformed section header at line " + std::to_string(lineno));
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: expected key=value at line " + std::to_string(lineno));
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw std::invalid_argument("config: key '" + key + "' outside any section");
        }
        set_key(c, section, key, value);
    }
    c.finalize();
    return c;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
    auto dot = dotted_key.find('.');
    if (dot == std::string::npos) {
        throw std::invalid_argument("override: want section.key, got '" + dotted_key + "'");
    }
    set_key(cfg, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value);
    cfg.finalize();
}

std::string serialize_config(const RunConfig& c) {
    std::string s;
    s += "[schedule]\n";
    s += "kind = " + schedule_kind_to_string(c.schedule.kind) + "\n";
    s += "total_steps = " + std::to_string(c.schedule.total_steps) + "\n";
    s += "\n[gmm]\n";
    s += "weights = " + join_doubles(c.gmm.weights) + "\n";
    std::string means;
    for (size_t i = 0; i < c.gmm.means.size(); ++i) {
        if (i) means += ";";
        means += join_doubles(c.gmm.means[i]);
    }
    s += "means = " + means + "\n";
    s += "stdevs = " + join_doubles(c.gmm.stdevs) + "\n";
    s += "\n[teacher]\n";
    s += "delta = " + format_double(c.teacher.delta) + "\n";
    s += "field = " + field_kind_to_string(c.teacher.field) + "\n";
    s += "seed = " + std::to_string(c.teacher.seed) + "\n";
    s += "\n[student]\n";
    s += "widths = " + join_ints(c.student.widths) + "\n";
    s += "activation = " + c.student.activation + "\n";
    s += "fourier_freqs = " + std::to_string(c.student.fourier_freqs) + "\n";
    s += "class_embed_dim = " + std::to_string(c.student.class_embed_dim) + "\n";
    s += std::string("condition_on_s = ") + (c.student.condition_on_s ? "true" : "false") + "\n";
    s += "\n[disc]\n";
    s += "widths = " + join_ints(c.disc.widths) + "\n";
    s += "\n[features]\n";
    s += "kind = " + feature_kind_to_string(c.features.kind) + "\n";
    s += "out_dim = " + std::to_string(c.features.out_dim) + "\n";
    s += "seed = " + std::to_string(c.features.seed) + "\n";
    s += "\n[distill]\n";
    s += "eta = " + format_double(c.distill.eta) + "\n";
    s += "rho = " + format_double(c.distill.rho) + "\n";
    s += "gamma = " + format_double(c.distill.gamma) + "\n";
    s += "bank_capacity = " + std::to_string(c.distill.bank_capacity) + "\n";
    s += "ema_mu = " + format_double(c.distill.ema_mu) + "\n";
    s += "lambda_adv = " + format_double(c.distill.lambda_adv) + "\n";
    s += "omega_min = " + format_double(c.distill.omega_min) + "\n";
    s += "omega_max = " + format_double(c.distill.omega_max) + "\n";
    s += "ode_steps = " + std::to_string(c.distill.ode_steps) + "\n";
    s += "iterations = " + std::to_string(c.distill.iterations) + "\n";
    s += "warmup_iterations = " + std::to_string(c.distill.warmup_iterations) + "\n";
    s += "batch_size = " + std::to_string(c.distill.batch_size) + "\n";
    s += "seed = " + std::to_string(c.distill.seed) + "\n";
    s += "mode = " + run_mode_to_string(c.distill.mode) + "\n";
    s += "r_rule = " + r_rule_to_string(c.distill.r_rule) + "\n";
    s += std::string("fixed_omega_per_trajectory = ") +
         (c.distill.fixed_omega_per_trajectory ? "true" : "false") + "\n";
    s += "lr_student = " + format_double(c.distill.lr_student) + "\n";
    s += "lr_disc = " + format_double(c.distill.lr_disc) + "\n";
    s += "lr_decay = " + format_double(c.distill.lr_decay) + "\n";
    s += "\n[eval]\n";
    s += "sw_projections = " + std::to_string(c.eval.sw_projections) + "\n";
    s += "sw_samples = " + std::to_string(c.eval.sw_samples) + "\n";
    s += "nfe = " + join_ints(c.eval.nfe) + "\n";
    s += "omega_eval = " + format_double(c.eval.omega_eval) + "\n";
    s += "eval_every = " + std::to_string(c.eval.eval_every) + "\n";
    s += "eval_samples = " + std::to_string(c.eval.eval_samples) + "\n";
    s += "checkpoint_every = " + std::to_string(c.eval.checkpoint_every) + "\n";
    if (!c.data_path.empty()) {
        s += "\n[data]\n";
        s += "path = " + c.data_path + "\n";
    }
    return s;
}

}  // namespace stdlab
