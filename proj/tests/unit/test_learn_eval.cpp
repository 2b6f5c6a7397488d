#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "repscen/cflp.hpp"
#include "repscen/csv.hpp"
#include "repscen/eval_harness.hpp"
#include "repscen/features.hpp"
#include "repscen/learn.hpp"

using namespace repscen;
namespace fs = std::filesystem;

namespace {

learn::Dataset synthetic(int rows, int d, int outputs, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  learn::Dataset ds;
  ds.X.resize(rows, d);
  for (Eigen::Index i = 0; i < ds.X.size(); ++i) ds.X.data()[i] = 2.0 * nd(rng) + 3.0;
  Eigen::MatrixXd beta(d, outputs);
  for (Eigen::Index i = 0; i < beta.size(); ++i) beta.data()[i] = nd(rng);
  ds.Y = ds.X * beta;
  ds.Y.rowwise() += Eigen::RowVectorXd::Constant(outputs, 4.0);
  for (Eigen::Index i = 0; i < ds.Y.size(); ++i) ds.Y.data()[i] += noise * nd(rng);
  for (int i = 0; i < rows; ++i) ds.ids.push_back("e" + std::to_string(i));
  ds.split = learn::assign_splits(rows, {}, seed);
  return ds;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& M, const std::vector<int>& r) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(r.size()), M.cols());
  for (std::size_t k = 0; k < r.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = M.row(r[k]);
  return out;
}

eval::MethodResult result(eval::Method m, const std::string& id, double obj, double secs) {
  eval::MethodResult r;
  r.method = m;
  r.instance_id = id;
  r.objective = obj;
  r.seconds = secs;
  r.demand = {obj / 10.0, 1.0};
  return r;
}

}  // namespace

TEST_CASE("learn: realizable linear target is fitted exactly") {
  learn::Dataset ds = synthetic(60, 5, 2, 0.0, 1);
  const learn::Model m = learn::train_lr(ds);
  const auto tr = ds.rows(learn::Split::kTrain);
  CHECK(learn::mse(m, rows_of(ds.X, tr), rows_of(ds.Y, tr)) <= 1e-8);
}

TEST_CASE("learn: three points on the diagonal") {
  learn::Dataset ds;
  ds.X.resize(3, 1);
  ds.Y.resize(3, 1);
  ds.X << 0, 1, 2;
  ds.Y << 0, 1, 2;
  ds.ids = {"a", "b", "c"};
  ds.split.assign(3, learn::Split::kTrain);
  const learn::Model m = learn::train_lr(ds);
  for (double x : {-1.0, 0.5, 5.0}) CHECK(learn::predict_raw(m, Eigen::MatrixXd::Constant(1, 1, x))(0, 0) ==
                                          doctest::Approx(x));
}

TEST_CASE("learn: zero weights predict the bias") {
  learn::Model m;
  m.kind = learn::ModelKind::kLinear;
  m.input_dim = 4;
  m.output_dim = 2;
  m.norm.mean = Eigen::VectorXd::Zero(4);
  m.norm.scale = Eigen::VectorXd::Ones(4);
  learn::Layer l;
  l.W = Eigen::MatrixXd::Zero(2, 4);
  l.b = Eigen::Vector2d(3.5, -1.0);
  m.layers.push_back(l);
  const std::vector<double> f = {9, 8, 7, 6};
  const auto p = learn::predict(m, f);
  CHECK(p.values[0] == 3.5);
  CHECK(p.values[1] == 0.0);  // clamped to a nonnegative demand
  CHECK(p.clamped == 1);
  CHECK_THROWS_AS(learn::predict(m, std::vector<double>{1.0}), ModelError);
}

TEST_CASE("learn: network without hidden layers reaches the linear fit") {
  learn::Dataset ds = synthetic(400, 6, 2, 0.5, 2);
  const learn::Model lr = learn::train_lr(ds);
  learn::AnnOptions opt;
  opt.hidden = {};
  opt.learning_rate = 0.01;
  opt.max_epochs = 400;
  opt.patience = 50;
  opt.seed = 9;
  const learn::Model ann = learn::train_ann(ds, opt);
  const auto val = ds.rows(learn::Split::kVal);
  const double a = learn::mse(ann, rows_of(ds.X, val), rows_of(ds.Y, val));
  const double b = learn::mse(lr, rows_of(ds.X, val), rows_of(ds.Y, val));
  CHECK(std::abs(a - b) <= 0.05 * b);
}

TEST_CASE("learn: zero learning rate leaves parameters untouched") {
  learn::Dataset ds = synthetic(50, 4, 2, 0.1, 3);
  learn::AnnOptions opt;
  opt.hidden = {5};
  opt.learning_rate = 0.0;
  opt.max_epochs = 7;
  opt.patience = 100;
  opt.seed = 4;
  const learn::Model trained = learn::train_ann(ds, opt);
  const learn::Model init = learn::init_network(4, 2, {5}, 4);
  CHECK(trained.layers[0].W == init.layers[0].W);
  CHECK(trained.layers[0].b == init.layers[0].b);
  CHECK(trained.layers[1].W == init.layers[1].W);
}

TEST_CASE("learn: seeded network training is reproducible") {
  learn::Dataset ds = synthetic(80, 4, 2, 0.3, 5);
  learn::AnnOptions opt;
  opt.hidden = {8, 4};
  opt.max_epochs = 20;
  opt.seed = 6;
  const auto a = learn::to_json(learn::train_ann(ds, opt)).dump();
  const auto b = learn::to_json(learn::train_ann(ds, opt)).dump();
  CHECK(a == b);
}

TEST_CASE("learn: splits are disjoint, exhaustive and seeded") {
  const auto s = learn::assign_splits(1000, {}, 11);
  CHECK(s == learn::assign_splits(1000, {}, 11));
  CHECK(s != learn::assign_splits(1000, {}, 12));
  const auto count = [&](learn::Split x) { return std::count(s.begin(), s.end(), x); };
  CHECK(count(learn::Split::kTrain) == 800);
  CHECK(count(learn::Split::kVal) == 100);
  CHECK(count(learn::Split::kTest) == 100);
  CHECK_THROWS_AS(learn::assign_splits(10, {0.5, 0.5, 0.5}, 1), ConfigError);
}

TEST_CASE("learn: normalization is fitted on training rows only") {
  learn::Dataset ds = synthetic(30, 2, 1, 0.1, 7);
  const auto val = ds.rows(learn::Split::kVal);
  for (int r : val) ds.X(r, 0) = 1e6;
  const learn::Model m = learn::train_lr(ds);
  const auto tr = ds.rows(learn::Split::kTrain);
  CHECK(m.norm.mean(0) == doctest::Approx(rows_of(ds.X, tr).col(0).mean()));
}

TEST_CASE("learn: model files round trip and reject bad input") {
  learn::Dataset ds = synthetic(40, 3, 2, 0.1, 8);
  learn::AnnOptions opt;
  opt.hidden = {4};
  opt.max_epochs = 3;
  const learn::Model m = learn::train_ann(ds, opt);
  const learn::Model back = learn::model_from_json(learn::to_json(m));
  CHECK(learn::to_json(back).dump() == learn::to_json(m).dump());
  auto j = learn::to_json(m);
  j["layers"][0]["weights"] = "oops";
  CHECK_THROWS_AS(learn::model_from_json(j), ArtifactError);
}

TEST_CASE("eval: diff ratio") {
  CHECK(eval::diff_ratio(100, 100) == 0.0);
  CHECK(eval::diff_ratio(103, 100) == doctest::Approx(0.03));
  CHECK(eval::diff_ratio(99.38, 100) == doctest::Approx(-0.0062));
  CHECK_THROWS_AS(eval::diff_ratio(1, 0), ModelError);
}

TEST_CASE("eval: time to quality") {
  const std::vector<IncumbentPoint> t = {{0.1, 50}, {0.4, 42}, {0.9, 40}};
  CHECK(eval::grb_time_to_quality(t, 40) == 0.9);
  CHECK(eval::grb_time_to_quality(t, 45) == 0.4);
  CHECK(std::isinf(eval::grb_time_to_quality(t, 39)));
}

TEST_CASE("eval: statistics and histograms") {
  const auto one = eval::summarize({4.0});
  CHECK(one.std == 0.0);
  CHECK(one.median == 4.0);
  const auto s = eval::summarize({1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  const auto h = eval::histogram({0, 4.9, 5, 12}, 5.0);
  REQUIRE(h.size() == 3);
  CHECK(h[0].count == 2);
  CHECK(h[1].count == 1);
  CHECK(h[2].count == 1);
}

TEST_CASE("eval: report on one instance against itself") {
  std::vector<eval::MethodResult> rs = {result(eval::Method::kGrb, "a", 100, 1.0),
                                        result(eval::Method::kAvg, "a", 100, 0.1)};
  std::map<std::string, eval::ExactTrace> traces = {{"a", {1.0, {{0.5, 100}}}}};
  const auto rep = eval::build_report(rs, traces);
  CHECK(rep.diff.at(eval::Method::kAvg).mean == 0.0);
  CHECK(rep.diff.at(eval::Method::kAvg).std == 0.0);
  CHECK(rep.diff.at(eval::Method::kAvg).max == 0.0);
}

TEST_CASE("eval: mismatched instance sets are rejected") {
  std::vector<eval::MethodResult> rs = {result(eval::Method::kGrb, "a", 100, 1.0),
                                        result(eval::Method::kGrb, "b", 100, 1.0),
                                        result(eval::Method::kLr, "a", 101, 0.1)};
  std::map<std::string, eval::ExactTrace> traces = {{"a", {1.0, {}}}, {"b", {1.0, {}}}};
  CHECK_THROWS(eval::build_report(rs, traces));
}

TEST_CASE("eval: report files agree with a recomputation from the raw results") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<eval::MethodResult> rs;
  std::map<std::string, eval::ExactTrace> traces;
  std::map<eval::Method, std::vector<double>> diffs, times;
  for (int k = 0; k < 25; ++k) {
    const std::string id = "i" + std::to_string(k);
    const double grb = 100 + 50 * u(rng);
    rs.push_back(result(eval::Method::kGrb, id, grb, 1 + u(rng)));
    traces[id] = {rs.back().seconds, {{0.2, grb * 1.1}, {0.7, grb}}};
    times[eval::Method::kGrb].push_back(rs.back().seconds);
    for (auto m : {eval::Method::kAvg, eval::Method::kRnd, eval::Method::kDist, eval::Method::kLr, eval::Method::kAnn}) {
      const double obj = grb * (1 + 0.2 * u(rng) - 0.01);
      rs.push_back(result(m, id, obj, 0.01 * u(rng)));
      diffs[m].push_back((obj - grb) / grb);
      times[m].push_back(rs.back().seconds);
    }
  }
  std::shuffle(rs.begin(), rs.end(), rng);  // order must not matter
  const auto rep = eval::build_report(rs, traces);
  const fs::path dir = fs::temp_directory_path() / "repscen_unit_report";
  fs::remove_all(dir);
  eval::write_report(rep, dir);
  const csv::Table t1 = csv::read(dir / "table1_diff_ratio.csv");
  for (const auto& row : t1.rows) {
    const auto& v = diffs[eval::method_from_string(row[0])];
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double d : v) var += (d - mean) * (d - mean);
    CHECK(std::abs(csv::parse_double(row[t1.column("avg")]) - mean) <= 1e-9);
    CHECK(std::abs(csv::parse_double(row[t1.column("std")]) - std::sqrt(var / v.size())) <= 1e-9);
    CHECK(csv::parse_double(row[t1.column("min")]) == *std::min_element(v.begin(), v.end()));
  }
  const csv::Table t2 = csv::read(dir / "table2_times.csv");
  for (const auto& row : t2.rows) {
    if (row[0] == "GRB-L" || row[0] == "GRB-A") continue;
    const auto& v = times[eval::method_from_string(row[0])];
    CHECK(std::abs(csv::parse_double(row[t2.column("avg")]) - std::accumulate(v.begin(), v.end(), 0.0) / v.size()) <=
          1e-9);
  }
  CHECK(fs::exists(dir / "fig1_scatter.csv"));
  CHECK(fs::exists(dir / "fig2_histograms.csv"));
  fs::remove_all(dir);
}

TEST_CASE("eval: results file round trip") {
  std::vector<eval::MethodResult> rs = {result(eval::Method::kGrb, "a", 100.25, 1.5),
                                        result(eval::Method::kDist, "a", 1.0 / 3.0, 0.1)};
  rs[0].x = {1, 0, 12.5, 0};
  rs[1].seed = 123456789012345ULL;
  rs[1].clamped = 2;
  const fs::path p = fs::temp_directory_path() / "repscen_unit_results.csv";
  eval::write_results(p, rs);
  const auto back = eval::read_results(p);
  fs::remove(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0].x == rs[0].x);
  CHECK(back[1].objective == rs[1].objective);
  CHECK(back[1].seed == rs[1].seed);
  CHECK(back[1].clamped == 2);
  CHECK(back[1].demand == rs[1].demand);
}

TEST_CASE("eval: baselines on a constant-demand instance coincide") {
  cflp::GeneratorConfig g;
  g.n = 3;
  g.m = 4;
  auto inst = cflp::generate_instance(g, 2);
  for (int s = 0; s < inst.m; ++s)
    for (int j = 0; j < 3; ++j) inst.demand(s, j) = 2.0 + j;
  const auto lowered = cflp::to_two_stage(inst);
  const auto avg = eval::run_baseline(eval::Method::kAvg, inst, lowered, "c", 1);
  const auto rnd = eval::run_baseline(eval::Method::kRnd, inst, lowered, "c", 1);
  CHECK(avg.demand == std::vector<double>{2, 3, 4});
  CHECK(avg.objective == doctest::Approx(rnd.objective));
  const auto exact = eval::run_exact(lowered, "c", SolverConfig::exact());
  CHECK(exact.result.objective == doctest::Approx(avg.objective));
}

TEST_CASE("eval: exact run respects the gap and model timing adds up") {
  cflp::GeneratorConfig g;
  g.n = 4;
  g.m = 8;
  const auto inst = cflp::generate_instance(g, 4);
  const auto lowered = cflp::to_two_stage(inst);
  const auto ex = eval::run_exact(lowered, "e", SolverConfig{});
  CHECK(ex.solution.gap <= 0.02 + 1e-12);
  CHECK(ex.result.objective >= ex.solution.best_bound - 1e-6);
  // A model that predicts the mean demand behaves like AVG.
  learn::Model m;
  m.input_dim = features::feature_length(4);
  m.output_dim = 4;
  m.norm.mean = Eigen::VectorXd::Zero(m.input_dim);
  m.norm.scale = Eigen::VectorXd::Ones(m.input_dim);
  learn::Layer l;
  l.W = Eigen::MatrixXd::Zero(4, m.input_dim);
  const auto mean = cflp::mean_demand(inst);
  l.b = Eigen::Map<const Eigen::VectorXd>(mean.data(), 4);
  m.layers.push_back(l);
  const auto r = eval::run_model(eval::Method::kLr, inst, lowered, "e", m);
  CHECK(r.seconds == doctest::Approx(r.feature_seconds + r.predict_seconds + r.surrogate_seconds));
  CHECK(r.objective == doctest::Approx(eval::run_baseline(eval::Method::kAvg, inst, lowered, "e", 0).objective));
  CHECK(r.objective >= ex.solution.best_bound - 1e-6);
}
