#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "repscen/mps.hpp"
#include "repscen/mip_solver.hpp"
#include "repscen/pipeline.hpp"

namespace pl = repscen::pipeline;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::string in;
};

void add_common(CLI::App* app, Common& c, bool needs_in) {
  app->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "root seed (overrides the config)");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output run directory");
  if (needs_in) app->add_option("--in", c.in, "input run directory (defaults to --out)");
}

pl::RunConfig resolve(const Common& c) {
  pl::RunConfig cfg = c.config.empty() ? pl::RunConfig{} : pl::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (cfg.output_dir.empty()) throw repscen::ConfigError("no output directory: pass --out or set output_dir");
  cfg.validate();
  return cfg;
}

pl::fs::path input_dir(const Common& c, const pl::RunConfig& cfg) { return c.in.empty() ? pl::fs::path(cfg.output_dir) : pl::fs::path(c.in); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representative-scenario learning for two-stage stochastic facility location"};
  app.require_subcommand(1);

  Common gen, lab, feat, train, ev, rep, run;
  std::string kind = "all";
  std::string models;
  std::string mps_in, mps_out;
  double mps_gap = 1e-6, mps_time = 60.0;

  auto* c_gen = app.add_subcommand("generate", "generate CFLP instances");
  add_common(c_gen, gen, false);
  auto* c_lab = app.add_subcommand("label", "exact solves and representative-scenario labels");
  add_common(c_lab, lab, true);
  auto* c_feat = app.add_subcommand("featurize", "feature vectors for labelled instances");
  add_common(c_feat, feat, true);
  auto* c_train = app.add_subcommand("train", "split the dataset and fit models");
  add_common(c_train, train, true);
  c_train->add_option("--kind", kind, "lr, ann or all")->check(CLI::IsMember({"lr", "ann", "all"}));
  auto* c_ev = app.add_subcommand("evaluate", "run every method on the test split");
  add_common(c_ev, ev, true);
  c_ev->add_option("--models", models, "directory holding models/ (defaults to --in)");
  auto* c_rep = app.add_subcommand("report", "summary tables and figure data");
  add_common(c_rep, rep, true);
  auto* c_run = app.add_subcommand("run", "all stages in one directory");
  add_common(c_run, run, false);
  auto* c_mps = app.add_subcommand("solve-mps", "solve an MPS file with the internal engine");
  c_mps->add_option("file", mps_in, "MPS input")->required()->check(CLI::ExistingFile);
  c_mps->add_option("--solution", mps_out, "write the solution file here");
  c_mps->add_option("--gap", mps_gap, "relative gap limit");
  c_mps->add_option("--time-limit", mps_time, "seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_gen) {
      const auto cfg = resolve(gen);
      pl::cmd_generate(cfg, cfg.output_dir);
    } else if (*c_lab) {
      const auto cfg = resolve(lab);
      pl::cmd_label(cfg, input_dir(lab, cfg), cfg.output_dir);
    } else if (*c_feat) {
      const auto cfg = resolve(feat);
      pl::cmd_featurize(cfg, input_dir(feat, cfg), cfg.output_dir);
    } else if (*c_train) {
      const auto cfg = resolve(train);
      const auto in = input_dir(train, cfg);
      if (kind != "ann") pl::cmd_train(cfg, repscen::learn::ModelKind::kLinear, in, cfg.output_dir);
      if (kind != "lr") pl::cmd_train(cfg, repscen::learn::ModelKind::kNeural, in, cfg.output_dir);
    } else if (*c_ev) {
      const auto cfg = resolve(ev);
      const auto in = input_dir(ev, cfg);
      pl::cmd_evaluate(cfg, models.empty() ? in : pl::fs::path(models), in, cfg.output_dir);
    } else if (*c_rep) {
      const auto cfg = resolve(rep);
      pl::cmd_report(cfg, input_dir(rep, cfg), cfg.output_dir);
    } else if (*c_run) {
      const auto cfg = resolve(run);
      pl::run_all(cfg, cfg.output_dir);
    } else if (*c_mps) {
      const auto problem = repscen::read_mps(pl::fs::path(mps_in));
      auto sc = repscen::SolverConfig::exact();
      sc.gap_limit = mps_gap;
      sc.time_limit = mps_time;
      const auto sol = repscen::solve_mip(problem, sc);
      fmt::print("status {}\nobjective {}\nbound {}\nnodes {}\n", repscen::to_string(sol.status), sol.best_objective,
                 sol.best_bound, sol.nodes);
      if (!mps_out.empty()) repscen::write_external_solution(sol, mps_out);
    }
  } catch (const repscen::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const repscen::ArtifactError& e) {
    fmt::print(stderr, "artifact error: {}\n", e.what());
    return 3;
  } catch (const repscen::BackendError& e) {
    fmt::print(stderr, "solver backend error: {}\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
