#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <fmt/format.h>

#include "repscen/csv.hpp"
#include "repscen/pipeline.hpp"

using namespace repscen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("repscen_unit_" + name);
  fs::remove_all(p);
  return p;
}

pipeline::RunConfig tiny(int count) {
  pipeline::RunConfig cfg;
  cfg.generator.n = 3;
  cfg.generator.m = 5;
  cfg.generator.count = count;
  cfg.training.ann.hidden = {8};
  cfg.training.ann.max_epochs = 30;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(REPSCEN_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("pipeline: one instance through generate, label and featurize") {
  const fs::path dir = scratch("one");
  auto cfg = tiny(1);
  pipeline::cmd_generate(cfg, dir);
  pipeline::cmd_label(cfg, dir, dir);
  const csv::Table labels = csv::read(pipeline::labels_csv(dir));
  REQUIRE(labels.rows.size() == 1);
  REQUIRE(labels.rows[0][labels.column("found")] == "1");
  pipeline::cmd_featurize(cfg, dir, dir);
  const csv::Table ds = csv::read(pipeline::dataset_csv(dir));
  CHECK(ds.rows.size() == 1);
  CHECK(ds.header.size() == static_cast<std::size_t>(19 * 3 + 3 + 1));
  fs::remove_all(dir);
}

TEST_CASE("pipeline: twenty tiny instances end to end, twice") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  auto cfg = tiny(20);
  cfg.jobs = 2;
  pipeline::run_all(cfg, a);
  cfg.jobs = 1;
  pipeline::run_all(cfg, b);
  for (const char* f : {"table1_diff_ratio.csv", "table2_times.csv", "fig1_scatter.csv", "fig2_histograms.csv"})
    CHECK(fs::exists(pipeline::report_dir(a) / f));
  CHECK(slurp(pipeline::dataset_csv(a)) == slurp(pipeline::dataset_csv(b)));
  CHECK(slurp(pipeline::labels_csv(a)) == slurp(pipeline::labels_csv(b)));
  CHECK(slurp(pipeline::model_file(a, learn::ModelKind::kNeural)) ==
        slurp(pipeline::model_file(b, learn::ModelKind::kNeural)));

  // Every output named by the manifest exists and carries the config hash.
  std::ifstream in(pipeline::manifest_file(a));
  const auto manifest = nlohmann::json::parse(in);
  const std::string hash = pipeline::config_hash(cfg);
  int listed = 0;
  for (const auto& [stage, entry] : manifest.at("stages").items()) {
    CHECK(entry.at("config_hash") == hash);
    for (const auto& out : entry.at("outputs")) {
      CHECK(fs::exists(a / out.get<std::string>()));
      ++listed;
    }
  }
  CHECK(manifest.at("stages").size() == 7);
  CHECK(listed > 40);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pipeline: configuration parsing") {
  const auto cfg = pipeline::config_from_json(
      {{"seed", 7}, {"generator", {{"n", 4}}}, {"rs_search", {{"difference", 0.01}}}, {"evaluation", {{"dist_mode", "empirical"}}}});
  CHECK(cfg.seed == 7);
  CHECK(cfg.generator.n == 4);
  CHECK(cfg.rs_search.difference == 0.01);
  CHECK(cfg.evaluation.dist_mode == eval::DistMode::kEmpirical);
  CHECK(pipeline::config_from_json(pipeline::to_json(cfg)).seed == 7);
  CHECK_THROWS_AS(pipeline::config_from_json({{"nope", 1}}), ConfigError);
  CHECK_THROWS_AS(pipeline::config_from_json({{"generator", {{"typo", 1}}}}), ConfigError);
  CHECK_THROWS_AS(pipeline::config_from_json({{"training", {{"split", {{"train", 0.9}}}}}}), ConfigError);
  CHECK_THROWS_AS(pipeline::config_from_json({{"generator", {{"n", "five"}}}}), ConfigError);
  // Stage seeds differ per stage and follow the root seed.
  CHECK(pipeline::stage_seed(cfg, "generate") != pipeline::stage_seed(cfg, "label"));
  auto other = cfg;
  other.seed = 8;
  CHECK(pipeline::stage_seed(cfg, "generate") != pipeline::stage_seed(other, "generate"));
  CHECK(pipeline::config_hash(cfg) != pipeline::config_hash(other));
  other = cfg;
  other.output_dir = "/elsewhere";
  CHECK(pipeline::config_hash(cfg) == pipeline::config_hash(other));
}

TEST_CASE("pipeline: missing upstream artifacts name the path") {
  const fs::path dir = scratch("missing");
  fs::create_directories(dir);
  try {
    pipeline::cmd_featurize(tiny(1), dir, dir);
    FAIL("expected an artifact error");
  } catch (const ArtifactError& e) {
    CHECK(std::string(e.what()).find("labels.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("cli: exit codes") {
  const fs::path dir = scratch("cli");
  write_file(dir / "bad.json", R"({"generator": {"bogus": 1}})");
  CHECK(run_tool(fmt::format("generate --config {} --out {}", (dir / "bad.json").string(), (dir / "run").string())) == 2);
  CHECK(run_tool(fmt::format("featurize --out {}", (dir / "empty").string())) == 3);
  write_file(dir / "small.json", R"({"generator": {"n": 3, "m": 4, "count": 2}})");
  CHECK(run_tool(fmt::format("generate --config {} --out {}", (dir / "small.json").string(), (dir / "run").string())) == 0);
  write_file(dir / "ext.json",
             R"({"generator": {"n": 3, "m": 4, "count": 2}, "solver": {"backend": "external", "external_command": "false"}})");
  CHECK(run_tool(fmt::format("label --config {} --out {}", (dir / "ext.json").string(), (dir / "run").string())) == 4);
  CHECK(run_tool("frobnicate") != 0);
  fs::remove_all(dir);
}
