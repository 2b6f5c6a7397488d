#include <cmath>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "repscen/cflp.hpp"
#include "repscen/core_model.hpp"
#include "repscen/features.hpp"
#include "repscen/learn.hpp"
#include "repscen/mip_solver.hpp"
#include "repscen/mps.hpp"
#include "repscen/pipeline.hpp"
#include "repscen/rs_search.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace repscen;

namespace {

// Python objects cross the boundary as JSON text.
json from_py(const py::object& o) {
  if (o.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

pipeline::RunConfig run_config(const py::object& config) {
  auto cfg = pipeline::config_from_json(from_py(config));
  cfg.validate();
  return cfg;
}

cflp::CflpInstance instance_of(const py::object& o) { return cflp::cflp_from_json(from_py(o)); }

py::dict solution_dict(const MipSolution& s) {
  py::dict d;
  d["status"] = to_string(s.status);
  d["objective"] = s.best_objective;
  d["best_bound"] = s.best_bound;
  d["gap"] = s.gap;
  d["x"] = s.x;
  d["seconds"] = s.seconds;
  d["nodes"] = s.nodes;
  return d;
}

SolverConfig solver_of(const py::object& o) {
  if (o.is_none()) return SolverConfig::exact();
  return pipeline::config_from_json({{"solver", from_py(o)}}).solver;
}

}  // namespace

PYBIND11_MODULE(_repscen, m) {
  m.doc() = "Representative-scenario learning for two-stage facility location";

  // Translators registered later are tried first, so the base class goes first.
  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ArtifactError>(m, "ArtifactError", base);
  py::register_exception<BackendError>(m, "BackendError", base);

  m.def(
      "generate_instance",
      [](const py::object& generator, std::uint64_t seed) {
        const auto g = pipeline::config_from_json({{"generator", from_py(generator)}}).generator;
        g.validate();
        return to_py(cflp::to_json(cflp::generate_instance(g, seed)));
      },
      py::arg("generator") = py::none(), py::arg("seed") = 1,
      "Random facility-location instance as a dict.");

  m.def(
      "solve_exact",
      [](const py::object& instance, const py::object& solver) {
        const auto lowered = cflp::to_two_stage(instance_of(instance));
        MipSolution s;
        {
          py::gil_scoped_release release;
          s = solve_extensive_form(lowered, solver_of(solver));
        }
        py::dict d = solution_dict(s);
        if (s.has_solution()) {
          const auto x = first_stage_part(lowered, s.x);
          d["x"] = x;
          d["phi"] = evaluate_ovf(lowered, x);
        }
        return d;
      },
      py::arg("instance"), py::arg("solver") = py::none(),
      "Extensive-form solve; x is the first-stage part and phi its objective value.");

  m.def(
      "evaluate_phi",
      [](const py::object& instance, const std::vector<double>& x) {
        return evaluate_ovf(cflp::to_two_stage(instance_of(instance)), x);
      },
      py::arg("instance"), py::arg("x"), "Objective value of a first-stage decision over all scenarios.");

  m.def(
      "surrogate_decision",
      [](const py::object& instance, const std::vector<double>& demand, const py::object& solver) {
        const auto inst = instance_of(instance);
        return rs::surrogate_decision(inst, cflp::to_two_stage(inst), demand, solver_of(solver));
      },
      py::arg("instance"), py::arg("demand"), py::arg("solver") = py::none(),
      "First-stage decision of the single-scenario problem for the given demand vector.");

  m.def(
      "find_representative",
      [](const py::object& instance, const py::object& config) {
        const auto inst = instance_of(instance);
        const auto lowered = cflp::to_two_stage(inst);
        const auto cfg = rs::rs_config_from_json(from_py(config));
        rs::RsLabel label;
        {
          py::gil_scoped_release release;
          const MipSolution s = solve_extensive_form(lowered, SolverConfig::exact());
          if (!s.has_solution()) throw Error("extensive form has no solution");
          auto x = first_stage_part(lowered, s.x);
          for (int i : lowered.int_first) x[i] = std::round(x[i]);
          label = rs::generate_xi_hat(inst, lowered, {x, evaluate_ovf(lowered, x)}, cfg);
        }
        py::dict d;
        d["found"] = label.found;
        d["xi_star"] = label.xi_star;
        d["iterations"] = label.iterations_used;
        d["achieved_phi"] = label.achieved_ovf;
        d["reference_phi"] = label.reference_ovf;
        return d;
      },
      py::arg("instance"), py::arg("config") = py::none(),
      "Search for a demand vector whose single-scenario decision is near-optimal.");

  m.def(
      "extract_features",
      [](const py::object& instance) { return features::extract_features(instance_of(instance)).values; },
      py::arg("instance"));
  m.def("feature_names", &features::feature_names, py::arg("n"));

  m.def(
      "predict",
      [](const py::object& model, const std::vector<double>& features) {
        return learn::predict(learn::model_from_json(from_py(model)), features).values;
      },
      py::arg("model"), py::arg("features"), "Apply a saved model (dict) to one feature vector.");

  m.def(
      "solve_mps",
      [](const std::filesystem::path& path, const py::object& solver) {
        const MipProblem p = read_mps(path);
        const auto cfg = solver.is_none() ? SolverConfig{} : solver_of(solver);
        py::gil_scoped_release release;
        return solve_mip(p, cfg);
      },
      py::arg("path"), py::arg("solver") = py::none());
  py::class_<MipSolution>(m, "MipSolution")
      .def_property_readonly("status", [](const MipSolution& s) { return to_string(s.status); })
      .def_readonly("objective", &MipSolution::best_objective)
      .def_readonly("best_bound", &MipSolution::best_bound)
      .def_readonly("gap", &MipSolution::gap)
      .def_readonly("x", &MipSolution::x)
      .def_readonly("seconds", &MipSolution::seconds)
      .def_readonly("nodes", &MipSolution::nodes);

  m.def(
      "default_config", []() { return to_py(pipeline::to_json(pipeline::RunConfig{})); },
      "Full run configuration with every default filled in.");
  m.def(
      "config_hash", [](const py::object& config) { return pipeline::config_hash(run_config(config)); },
      py::arg("config") = py::none());

  // Pipeline stages. `config` is a dict in the same shape as the CLI config file.
  m.def(
      "generate",
      [](const std::filesystem::path& out, const py::object& config) {
        const auto cfg = run_config(config);
        py::gil_scoped_release release;
        pipeline::cmd_generate(cfg, out);
      },
      py::arg("out"), py::arg("config") = py::none());
  m.def(
      "label",
      [](const std::filesystem::path& dir, const py::object& config) {
        const auto cfg = run_config(config);
        py::gil_scoped_release release;
        pipeline::cmd_label(cfg, dir, dir);
      },
      py::arg("dir"), py::arg("config") = py::none());
  m.def(
      "featurize",
      [](const std::filesystem::path& dir, const py::object& config) {
        const auto cfg = run_config(config);
        py::gil_scoped_release release;
        pipeline::cmd_featurize(cfg, dir, dir);
      },
      py::arg("dir"), py::arg("config") = py::none());
  m.def(
      "train",
      [](const std::filesystem::path& dir, const std::string& kind, const py::object& config) {
        const auto cfg = run_config(config);
        if (kind != "lr" && kind != "ann") throw ConfigError("kind must be 'lr' or 'ann'");
        py::gil_scoped_release release;
        pipeline::cmd_train(cfg, kind == "lr" ? learn::ModelKind::kLinear : learn::ModelKind::kNeural, dir, dir);
      },
      py::arg("dir"), py::arg("kind"), py::arg("config") = py::none());
  m.def(
      "evaluate",
      [](const std::filesystem::path& dir, const py::object& config) {
        const auto cfg = run_config(config);
        py::gil_scoped_release release;
        pipeline::cmd_evaluate(cfg, dir, dir, dir);
      },
      py::arg("dir"), py::arg("config") = py::none());
  m.def(
      "report",
      [](const std::filesystem::path& dir, const py::object& config) {
        const auto cfg = run_config(config);
        py::gil_scoped_release release;
        pipeline::cmd_report(cfg, dir, dir);
      },
      py::arg("dir"), py::arg("config") = py::none());
  m.def(
      "run",
      [](const std::filesystem::path& dir, const py::object& config) {
        const auto cfg = run_config(config);
        py::gil_scoped_release release;
        pipeline::run_all(cfg, dir);
      },
      py::arg("dir"), py::arg("config") = py::none(), "All stages in order inside one directory.");
}
