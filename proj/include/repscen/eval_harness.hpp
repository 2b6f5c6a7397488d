#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "repscen/cflp.hpp"
#include "repscen/core_model.hpp"
#include "repscen/learn.hpp"

namespace repscen::eval {

enum class Method { kGrb, kAvg, kRnd, kDist, kLr, kAnn };
inline constexpr std::array<Method, 6> kAllMethods = {Method::kGrb, Method::kAvg, Method::kRnd,
                                                      Method::kDist, Method::kLr,  Method::kAnn};
const char* to_string(Method m);
Method method_from_string(std::string_view s);

/// How DIST turns the LR prediction into a scenario: Poisson draws with the
/// predicted means, or a uniformly drawn prediction from a pool of LR
/// predictions over other instances.
enum class DistMode { kPoisson, kEmpirical };
const char* to_string(DistMode m);
DistMode dist_mode_from_string(std::string_view s);

/// The exact solve ended without an incumbent; the instance is dropped.
class InstanceExcluded : public Error {
 public:
  using Error::Error;
};

struct MethodResult {
  Method method = Method::kGrb;
  std::string instance_id;
  double objective = kInf;  // Phi of x
  double seconds = 0.0;     // wall time charged to the method
  double feature_seconds = 0.0;
  double predict_seconds = 0.0;
  double surrogate_seconds = 0.0;
  int clamped = 0;
  std::uint64_t seed = 0;
  std::vector<double> x;
  std::vector<double> demand;  // scenario handed to the surrogate; empty for GRB
};

struct ExactRun {
  MethodResult result;
  MipSolution solution;
};

/// Extensive-form solve under `solver` (the GRB role). result.objective is
/// Phi of the returned first stage; solution keeps bound, gap and trajectory.
ExactRun run_exact(const TwoStageInstance& lowered, const std::string& id, const SolverConfig& solver,
                   const OvfOptions& ovf = {});

/// Solves the surrogate for `demand` and evaluates Phi of its first stage.
/// Only the surrogate solve is timed.
MethodResult run_surrogate(Method method, const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                           const std::string& id, std::span<const double> demand, const OvfOptions& ovf = {});

struct BaselineContext {
  const learn::Model* lr = nullptr;  // required for DIST
  DistMode dist_mode = DistMode::kPoisson;
  const std::vector<std::vector<double>>* pool = nullptr;  // required for empirical DIST
};

/// AVG, RND or DIST. AVG uses the column means; RND draws one scenario
/// uniformly; DIST samples from the LR prediction per `ctx.dist_mode`. Time
/// covers sampling and the surrogate solve, not the LR prediction.
MethodResult run_baseline(Method which, const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                          const std::string& id, std::uint64_t seed, const BaselineContext& ctx = {},
                          const OvfOptions& ovf = {});

/// LR or ANN: features, prediction (clamped at 0) and surrogate solve, each
/// timed; seconds is their sum.
MethodResult run_model(Method which, const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                       const std::string& id, const learn::Model& model, const OvfOptions& ovf = {});

/// (method_obj - grb_obj) / grb_obj; throws ModelError when grb_obj <= 0.
double diff_ratio(double method_obj, double grb_obj);

/// Earliest trajectory time whose objective is <= target; +inf when never.
double grb_time_to_quality(const std::vector<IncumbentPoint>& trajectory, double target);

struct Stats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

Stats summarize(std::vector<double> values);

struct HistogramBin {
  double lo;
  double hi;
  std::size_t count;
};

/// Bins [k w, (k+1) w) from 0 up to the largest value.
std::vector<HistogramBin> histogram(const std::vector<double>& values, double width);

struct ExactTrace {
  double seconds = 0.0;  // total exact solve time
  std::vector<IncumbentPoint> trajectory;
};

struct ComparisonReport {
  std::vector<Method> methods;
  std::size_t instances = 0;
  std::map<Method, Stats> diff;  // every method except GRB
  std::map<Method, Stats> time;
  bool has_grb_l = false;
  bool has_grb_a = false;
  Stats grb_l;
  Stats grb_a;
  std::size_t censored_l = 0;
  std::size_t censored_a = 0;
  std::map<Method, std::vector<HistogramBin>> histograms;
};

/// Requires a GRB result and the same instance set for every method.
/// Censored GRB-L/GRB-A times enter the statistics as the total exact solve
/// time (a lower bound) and are counted separately.
ComparisonReport build_report(const std::vector<MethodResult>& results,
                              const std::map<std::string, ExactTrace>& traces, double bin_width = 5.0);

/// table1_diff_ratio.csv, table2_times.csv, fig1_scatter.csv, fig2_histograms.csv
void write_report(const ComparisonReport& report, const std::filesystem::path& dir);

void write_results(const std::filesystem::path& path, const std::vector<MethodResult>& results);
std::vector<MethodResult> read_results(const std::filesystem::path& path);

}  // namespace repscen::eval
