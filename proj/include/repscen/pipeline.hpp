#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "repscen/cflp.hpp"
#include "repscen/eval_harness.hpp"
#include "repscen/learn.hpp"
#include "repscen/mip_problem.hpp"
#include "repscen/rs_search.hpp"

namespace repscen::pipeline {

namespace fs = std::filesystem;

struct TrainingConfig {
  learn::SplitFractions split;
  learn::LrOptions lr;
  learn::AnnOptions ann;  // ann.seed is derived from the root seed
};

struct EvaluationConfig {
  std::vector<eval::Method> methods{eval::kAllMethods.begin(), eval::kAllMethods.end()};
  eval::DistMode dist_mode = eval::DistMode::kPoisson;
  double histogram_bin_width = 5.0;
};

/// Every section rejects unknown keys. Missing keys keep their defaults.
struct RunConfig {
  std::uint64_t seed = 2020;
  std::string output_dir;
  int jobs = 1;
  cflp::GeneratorConfig generator;
  SolverConfig solver;
  rs::RsSearchConfig rs_search;
  TrainingConfig training;
  EvaluationConfig evaluation;

  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const fs::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_hash(const RunConfig& cfg);

/// Stage seeds: derive_seed(root, stage name).
std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage);

std::string instance_id(std::size_t index);

// Artifact layout below a run directory.
inline fs::path instances_csv(const fs::path& dir) { return dir / "instances.csv"; }
inline fs::path instance_file(const fs::path& dir, const std::string& id) { return dir / "instances" / (id + ".json"); }
inline fs::path exact_file(const fs::path& dir, const std::string& id) { return dir / "exact" / (id + ".json"); }
inline fs::path labels_csv(const fs::path& dir) { return dir / "labels.csv"; }
inline fs::path excluded_csv(const fs::path& dir) { return dir / "excluded.csv"; }
inline fs::path dataset_csv(const fs::path& dir) { return dir / "dataset.csv"; }
inline fs::path splits_csv(const fs::path& dir) { return dir / "splits.csv"; }
inline fs::path model_file(const fs::path& dir, learn::ModelKind k) {
  return dir / "models" / (k == learn::ModelKind::kLinear ? "lr.json" : "ann.json");
}
inline fs::path train_log_csv(const fs::path& dir, learn::ModelKind k) {
  return dir / "models" / (k == learn::ModelKind::kLinear ? "lr_log.csv" : "ann_log.csv");
}
inline fs::path results_csv(const fs::path& dir) { return dir / "results.csv"; }
inline fs::path traces_csv(const fs::path& dir) { return dir / "exact_traces.csv"; }
inline fs::path report_dir(const fs::path& dir) { return dir / "report"; }
inline fs::path manifest_file(const fs::path& dir) { return dir / "manifest.json"; }

struct InstanceEntry {
  std::string id;
  std::string path;  // relative to the run directory
  std::uint64_t seed;
};

std::vector<InstanceEntry> read_instance_index(const fs::path& dir);
cflp::CflpInstance load_instance(const fs::path& dir, const std::string& id);
learn::Dataset load_dataset(const fs::path& dir, int* n_out = nullptr);

/// Writes instances/ and instances.csv.
void cmd_generate(const RunConfig& cfg, const fs::path& out);
/// Exact solve plus representative-scenario search per instance: exact/,
/// labels.csv, excluded.csv.
void cmd_label(const RunConfig& cfg, const fs::path& in, const fs::path& out);
/// dataset.csv with the instances that have a label.
void cmd_featurize(const RunConfig& cfg, const fs::path& in, const fs::path& out);
/// splits.csv plus models/lr.json or models/ann.json with training logs.
void cmd_train(const RunConfig& cfg, learn::ModelKind kind, const fs::path& in, const fs::path& out);
/// results.csv and exact_traces.csv over the test split.
void cmd_evaluate(const RunConfig& cfg, const fs::path& models, const fs::path& in, const fs::path& out);
/// report/ tables and figure data.
void cmd_report(const RunConfig& cfg, const fs::path& in, const fs::path& out);

/// All stages in order inside one directory.
void run_all(const RunConfig& cfg, const fs::path& dir);

}  // namespace repscen::pipeline
