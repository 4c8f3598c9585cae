#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stdlab/config.hpp"
#include "stdlab/distill.hpp"
#include "stdlab/dynamics.hpp"
#include "stdlab/eval.hpp"
#include "stdlab/models.hpp"
#include "stdlab/nets.hpp"
#include "stdlab/schedule.hpp"

namespace py = pybind11;
using namespace stdlab;

namespace {

GmmSpec make_gmm(const std::vector<double>& weights, const std::vector<Vec>& means,
                 const std::vector<double>& stdevs) {
    GmmSpec g;
    g.weights = weights;
    g.means = means;
    g.stdevs = stdevs;
    g.validate();
    return g;
}

Condition cond_from(py::object label) {
    if (label.is_none()) return Condition::null_cond();
    return Condition::class_label(label.cast<int>());
}

}  // namespace

PYBIND11_MODULE(_stdlab, m) {
    m.doc() = "single-trajectory consistency distillation lab (core bindings)";
    m.attr("__version__") = "0.1.0";

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("total_steps", &NoiseSchedule::total_steps)
        .def_readonly("alpha_bar", &NoiseSchedule::alpha_bar)
        .def("abar", &NoiseSchedule::abar)
        .def("sigma", &NoiseSchedule::sigma);

    m.def("build_schedule",
          [](const std::string& kind, int total_steps) {
              return build_schedule(schedule_kind_from_string(kind), total_steps);
          },
          py::arg("kind") = "linear-beta", py::arg("total_steps") = 1000);
    m.def("tau_eta", &tau_eta, py::arg("schedule"), py::arg("eta"));
    m.def("uniform_grid",
          [](const NoiseSchedule& s, int tau, int n) { return uniform_grid(s, tau, n).timesteps; },
          py::arg("schedule"), py::arg("tau"), py::arg("n_steps"));

    m.def("perturb", &perturb, py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("schedule"));
    m.def("ddim_step", &ddim_step, py::arg("x_t"), py::arg("t"), py::arg("s"), py::arg("eps_pred"),
          py::arg("schedule"));
    m.def("c_coefficient", &c_coefficient, py::arg("t"), py::arg("s"), py::arg("schedule"));
    m.def("one_step_residual",
          [](const Vec& x0, const Vec& eps, int t, int s, const Vec& eps_phi,
             const NoiseSchedule& schedule) {
              FixedEpsPredictor teacher(eps_phi);
              ResidualPair rp = one_step_residual(x0, eps, t, s, teacher, schedule);
              return py::make_tuple(rp.residual, rp.predicted);
          },
          py::arg("x0"), py::arg("eps"), py::arg("t"), py::arg("s"), py::arg("eps_phi"),
          py::arg("schedule"));

    py::class_<GmmSpec>(m, "GmmSpec")
        .def(py::init(&make_gmm), py::arg("weights"), py::arg("means"), py::arg("stdevs"))
        .def_readonly("weights", &GmmSpec::weights)
        .def_readonly("means", &GmmSpec::means)
        .def_readonly("stdevs", &GmmSpec::stdevs)
        .def("dim", &GmmSpec::dim)
        .def("components", &GmmSpec::components);

    m.def("gmm_sample",
          [](const GmmSpec& spec, int n, uint64_t seed, py::object label) {
              Rng rng(seed);
              std::vector<Vec> points;
              std::vector<int> labels;
              Condition c = cond_from(label);
              for (int i = 0; i < n; ++i) {
                  auto [x, cond] = gmm_sample(spec, c, rng);
                  points.push_back(std::move(x));
                  labels.push_back(cond.label);
              }
              return py::make_tuple(points, labels);
          },
          py::arg("spec"), py::arg("n"), py::arg("seed") = 1, py::arg("label") = py::none());

    m.def("analytic_eps",
          [](const GmmSpec& spec, const Vec& x_t, int t, py::object label,
             const NoiseSchedule& schedule) {
              return analytic_eps(spec, x_t, t, cond_from(label), schedule);
          },
          py::arg("spec"), py::arg("x_t"), py::arg("t"), py::arg("label"), py::arg("schedule"));

    m.def("log_marginal_density",
          [](const GmmSpec& spec, const Vec& x_t, int t, py::object label,
             const NoiseSchedule& schedule) {
              return log_marginal_density(spec, x_t, t, cond_from(label), schedule);
          },
          py::arg("spec"), py::arg("x_t"), py::arg("t"), py::arg("label"), py::arg("schedule"));

    m.def("sliced_wasserstein",
          [](const std::vector<Vec>& a, const std::vector<Vec>& b, int projections, uint64_t seed) {
              Rng rng(seed);
              return sliced_wasserstein(a, b, projections, rng);
          },
          py::arg("a"), py::arg("b"), py::arg("projections") = 128, py::arg("seed") = 1);

    m.def("verify_theorem",
          [](int total_steps, int trials, int dim, uint64_t seed) {
              NoiseSchedule sched = build_schedule(ScheduleKind::LinearBeta, total_steps);
              std::vector<int> t_values, s_candidates;
              standard_theorem_sweep(sched, t_values, s_candidates);
              TheoremReport rep = verify_theorem({0.0, 0.1, 0.3, 1.0}, sched, t_values,
                                                 s_candidates, trials, dim, seed);
              py::dict out;
              out["rows"] = rep.rows.size();
              out["max_identity_err"] = rep.max_identity_err;
              out["pass"] = rep.pass;
              return out;
          },
          py::arg("total_steps") = 1000, py::arg("trials") = 20, py::arg("dim") = 2,
          py::arg("seed") = 1);

    m.def("default_config_text", []() { return serialize_config(default_config()); });

    m.def("distill_run",
          [](const std::string& config_text, const std::string& run_dir) {
              RunConfig cfg = parse_config_text(config_text);
              TrainState st = make_train_state(cfg);
              RunReport rep = run_distillation(st, run_dir);
              py::dict out;
              out["iterations"] = st.iterations_done;
              out["report_hash"] = rep.deterministic_hash();
              if (!rep.snapshots.empty()) {
                  out["first_gap"] = rep.snapshots.front().consistency_gap;
                  out["final_gap"] = rep.snapshots.back().consistency_gap;
                  out["final_sw"] = rep.snapshots.back().sw_distance;
              }
              return out;
          },
          py::arg("config_text"), py::arg("run_dir"));

    m.def("student_sample",
          [](const std::string& checkpoint, int nfe, int n, uint64_t seed) {
              TrainState st = load_train_state(checkpoint);
              Rng rng(seed);
              const int tau = tau_eta(st.schedule, st.cfg.distill.eta);
              StepGrid grid = uniform_grid(st.schedule, tau, nfe);
              std::vector<Vec> out;
              for (int i = 0; i < n; ++i) {
                  auto [x0, cond] = gmm_sample(st.cfg.gmm, Condition::null_cond(), rng);
                  Vec x = perturb(x0, tau, rng.normal_vec(x0.size()), st.schedule);
                  for (size_t k = 0; k + 1 < grid.timesteps.size(); ++k) {
                      x = consistency_fn(st.student, x, grid.timesteps[k], grid.timesteps[k + 1],
                                         cond, st.schedule);
                  }
                  out.push_back(std::move(x));
              }
              return out;
          },
          py::arg("checkpoint"), py::arg("nfe") = 4, py::arg("n") = 1024, py::arg("seed") = 1);
}
