#include "repscen/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "repscen/csv.hpp"
#include "repscen/features.hpp"
#include "repscen/mip_solver.hpp"
#include "repscen/rs_search.hpp"

namespace repscen::eval {

const char* to_string(Method m) {
  switch (m) {
    case Method::kGrb: return "GRB";
    case Method::kAvg: return "AVG";
    case Method::kRnd: return "RND";
    case Method::kDist: return "DIST";
    case Method::kLr: return "LR";
    case Method::kAnn: return "ANN";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  for (Method m : kAllMethods)
    if (s == to_string(m)) return m;
  throw ConfigError(fmt::format("unknown method '{}'", s));
}

const char* to_string(DistMode m) { return m == DistMode::kPoisson ? "poisson" : "empirical"; }

DistMode dist_mode_from_string(std::string_view s) {
  if (s == "poisson") return DistMode::kPoisson;
  if (s == "empirical") return DistMode::kEmpirical;
  throw ConfigError(fmt::format("unknown DIST mode '{}'", s));
}

ExactRun run_exact(const TwoStageInstance& lowered, const std::string& id, const SolverConfig& solver,
                   const OvfOptions& ovf) {
  ExactRun run;
  Stopwatch clock;
  run.solution = solve_extensive_form(lowered, solver, ovf);
  const double seconds = clock.seconds();
  if (!run.solution.has_solution())
    throw InstanceExcluded(fmt::format("instance {}: exact solve ended without incumbent ({})", id,
                                       to_string(run.solution.status)));
  run.result.method = Method::kGrb;
  run.result.instance_id = id;
  run.result.seconds = seconds;
  run.result.x = first_stage_part(lowered, run.solution.x);
  for (int j : lowered.int_first) run.result.x[j] = std::round(run.result.x[j]);
  run.result.objective = evaluate_ovf(lowered, run.result.x, ovf);
  return run;
}

MethodResult run_surrogate(Method method, const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                           const std::string& id, std::span<const double> demand, const OvfOptions& ovf) {
  MethodResult r;
  r.method = method;
  r.instance_id = id;
  r.demand.assign(demand.begin(), demand.end());
  Stopwatch clock;
  r.x = rs::surrogate_decision(inst, lowered, demand, ovf.solver);
  r.surrogate_seconds = clock.seconds();
  r.seconds = r.surrogate_seconds;
  r.objective = evaluate_ovf(lowered, r.x, ovf);
  return r;
}

MethodResult run_baseline(Method which, const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                          const std::string& id, std::uint64_t seed, const BaselineContext& ctx,
                          const OvfOptions& ovf) {
  std::mt19937_64 rng(seed);
  std::vector<double> demand;
  double sample_seconds = 0.0;
  switch (which) {
    case Method::kAvg: demand = cflp::mean_demand(inst); break;
    case Method::kRnd: {
      Stopwatch clock;
      std::uniform_int_distribution<int> pick(0, inst.m - 1);
      const auto row = inst.demand.row(static_cast<std::size_t>(pick(rng)));
      demand.assign(row.begin(), row.end());
      sample_seconds = clock.seconds();
      break;
    }
    case Method::kDist: {
      if (ctx.lr == nullptr) throw ConfigError("DIST needs a trained LR model");
      const auto fv = features::extract_features(inst);
      const auto pred = learn::predict(*ctx.lr, fv.values);
      Stopwatch clock;
      if (ctx.dist_mode == DistMode::kPoisson) {
        demand.resize(pred.values.size());
        for (std::size_t j = 0; j < demand.size(); ++j) {
          const double mean = std::max(0.0, pred.values[j]);
          demand[j] = mean > 0.0 ? static_cast<double>(std::poisson_distribution<int>(mean)(rng)) : 0.0;
        }
      } else {
        if (ctx.pool == nullptr || ctx.pool->empty()) throw ConfigError("empirical DIST needs a prediction pool");
        std::uniform_int_distribution<std::size_t> pick(0, ctx.pool->size() - 1);
        demand = (*ctx.pool)[pick(rng)];
      }
      sample_seconds = clock.seconds();
      break;
    }
    default: throw ConfigError(fmt::format("{} is not a baseline", to_string(which)));
  }
  MethodResult r = run_surrogate(which, inst, lowered, id, demand, ovf);
  r.seed = seed;
  r.seconds += sample_seconds;
  return r;
}

MethodResult run_model(Method which, const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                       const std::string& id, const learn::Model& model, const OvfOptions& ovf) {
  if (which != Method::kLr && which != Method::kAnn)
    throw ConfigError(fmt::format("{} is not a learned method", to_string(which)));
  Stopwatch clock;
  const auto fv = features::extract_features(inst);
  const double t_feat = clock.seconds();
  clock.reset();
  const auto pred = learn::predict(model, fv.values);
  const double t_pred = clock.seconds();
  MethodResult r = run_surrogate(which, inst, lowered, id, pred.values, ovf);
  r.feature_seconds = t_feat;
  r.predict_seconds = t_pred;
  r.clamped = pred.clamped;
  r.seconds = t_feat + t_pred + r.surrogate_seconds;
  return r;
}

double diff_ratio(double method_obj, double grb_obj) {
  if (!(grb_obj > 0.0)) throw ModelError(fmt::format("diff ratio undefined for exact objective {}", grb_obj));
  return (method_obj - grb_obj) / grb_obj;
}

double grb_time_to_quality(const std::vector<IncumbentPoint>& trajectory, double target) {
  for (const auto& p : trajectory)
    if (p.objective <= target) return p.seconds;
  return kInf;
}

Stats summarize(std::vector<double> values) {
  Stats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const std::size_t k = values.size();
  s.median = k % 2 == 1 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(k);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = k > 1 ? std::sqrt(var / static_cast<double>(k)) : 0.0;
  return s;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, double width) {
  if (!(width > 0.0)) throw ConfigError("histogram bin width must be > 0");
  std::vector<HistogramBin> bins;
  if (values.empty()) return bins;
  const double top = *std::max_element(values.begin(), values.end());
  const auto count = static_cast<std::size_t>(std::floor(std::max(0.0, top) / width)) + 1;
  for (std::size_t k = 0; k < count; ++k) bins.push_back({k * width, (k + 1) * width, 0});
  for (double v : values) {
    const auto k = static_cast<std::size_t>(std::floor(std::max(0.0, v) / width));
    ++bins[std::min(k, count - 1)].count;
  }
  return bins;
}

ComparisonReport build_report(const std::vector<MethodResult>& results,
                              const std::map<std::string, ExactTrace>& traces, double bin_width) {
  std::map<Method, std::map<std::string, const MethodResult*>> by_method;
  for (const auto& r : results) {
    auto& slot = by_method[r.method][r.instance_id];
    if (slot != nullptr)
      throw ArtifactError(fmt::format("duplicate result for {} on {}", to_string(r.method), r.instance_id));
    slot = &r;
  }
  if (!by_method.count(Method::kGrb)) throw ArtifactError("report needs GRB results");
  const auto& grb = by_method.at(Method::kGrb);
  for (const auto& [m, rows] : by_method) {
    bool same = rows.size() == grb.size();
    for (auto a = rows.begin(), b = grb.begin(); same && a != rows.end(); ++a, ++b) same = a->first == b->first;
    if (!same) throw ArtifactError(fmt::format("{} was evaluated on a different instance set than GRB", to_string(m)));
  }

  ComparisonReport rep;
  rep.instances = grb.size();
  for (const auto& [m, rows] : by_method) {
    rep.methods.push_back(m);
    std::vector<double> diffs, times, demand;
    for (const auto& [id, r] : rows) {
      times.push_back(r->seconds);
      if (m != Method::kGrb) diffs.push_back(diff_ratio(r->objective, grb.at(id)->objective));
      demand.insert(demand.end(), r->demand.begin(), r->demand.end());
    }
    rep.time[m] = summarize(times);
    if (m != Method::kGrb) rep.diff[m] = summarize(diffs);
    if (!demand.empty()) rep.histograms[m] = histogram(demand, bin_width);
  }

  auto quality_times = [&](Method m, std::size_t& censored) {
    std::vector<double> out;
    for (const auto& [id, r] : by_method.at(m)) {
      const auto it = traces.find(id);
      if (it == traces.end()) throw ArtifactError(fmt::format("missing exact trajectory for {}", id));
      double t = grb_time_to_quality(it->second.trajectory, r->objective);
      if (!std::isfinite(t)) {
        ++censored;
        t = it->second.seconds;
      }
      out.push_back(t);
    }
    return summarize(out);
  };
  if (by_method.count(Method::kLr)) {
    rep.has_grb_l = true;
    rep.grb_l = quality_times(Method::kLr, rep.censored_l);
  }
  if (by_method.count(Method::kAnn)) {
    rep.has_grb_a = true;
    rep.grb_a = quality_times(Method::kAnn, rep.censored_a);
  }
  return rep;
}

namespace {

std::vector<std::string> stats_cells(const Stats& s) {
  return {csv::format_double(s.min), csv::format_double(s.max), csv::format_double(s.mean),
          csv::format_double(s.median), csv::format_double(s.std), std::to_string(s.count)};
}

}  // namespace

void write_report(const ComparisonReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::vector<std::string> stat_header = {"min", "max", "avg", "median", "std", "count"};

  csv::Table t1;
  t1.header = {"method"};
  t1.header.insert(t1.header.end(), stat_header.begin(), stat_header.end());
  for (Method m : report.methods) {
    if (m == Method::kGrb) continue;
    auto row = stats_cells(report.diff.at(m));
    row.insert(row.begin(), to_string(m));
    t1.rows.push_back(std::move(row));
  }
  csv::write(dir / "table1_diff_ratio.csv", t1);

  csv::Table t2;
  t2.header = t1.header;
  t2.header.push_back("censored");
  for (Method m : report.methods) {
    auto row = stats_cells(report.time.at(m));
    row.insert(row.begin(), to_string(m));
    row.push_back("0");
    t2.rows.push_back(std::move(row));
  }
  auto quality_row = [&](const char* name, const Stats& s, std::size_t censored) {
    auto row = stats_cells(s);
    row.insert(row.begin(), name);
    row.push_back(std::to_string(censored));
    t2.rows.push_back(std::move(row));
  };
  if (report.has_grb_l) quality_row("GRB-L", report.grb_l, report.censored_l);
  if (report.has_grb_a) quality_row("GRB-A", report.grb_a, report.censored_a);
  csv::write(dir / "table2_times.csv", t2);

  csv::Table f1;
  f1.header = {"method", "avg_time", "avg_diff_ratio"};
  for (Method m : report.methods) {
    const double d = m == Method::kGrb ? 0.0 : report.diff.at(m).mean;
    f1.rows.push_back({to_string(m), csv::format_double(report.time.at(m).mean), csv::format_double(d)});
  }
  csv::write(dir / "fig1_scatter.csv", f1);

  csv::Table f2;
  f2.header = {"method", "bin_lo", "bin_hi", "count"};
  for (const auto& [m, bins] : report.histograms)
    for (const auto& b : bins)
      f2.rows.push_back({to_string(m), csv::format_double(b.lo), csv::format_double(b.hi), std::to_string(b.count)});
  csv::write(dir / "fig2_histograms.csv", f2);
}

void write_results(const std::filesystem::path& path, const std::vector<MethodResult>& results) {
  csv::Table t;
  t.header = {"method",         "instance_id",  "objective", "seconds", "feature_seconds", "predict_seconds",
              "surrogate_seconds", "clamped", "seed",      "x",       "demand"};
  for (const auto& r : results)
    t.rows.push_back({to_string(r.method), r.instance_id, csv::format_double(r.objective),
                      csv::format_double(r.seconds), csv::format_double(r.feature_seconds),
                      csv::format_double(r.predict_seconds), csv::format_double(r.surrogate_seconds),
                      std::to_string(r.clamped), std::to_string(r.seed), csv::join(r.x), csv::join(r.demand)});
  csv::write(path, t);
}

std::vector<MethodResult> read_results(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::string where = path.string();
  const auto c_method = t.column("method"), c_id = t.column("instance_id"), c_obj = t.column("objective"),
             c_sec = t.column("seconds"), c_feat = t.column("feature_seconds"), c_pred = t.column("predict_seconds"),
             c_sur = t.column("surrogate_seconds"), c_cl = t.column("clamped"), c_seed = t.column("seed"),
             c_x = t.column("x"), c_d = t.column("demand");
  std::vector<MethodResult> out;
  for (const auto& row : t.rows) {
    MethodResult r;
    try {
      r.method = method_from_string(row[c_method]);
    } catch (const ConfigError& e) {
      throw ArtifactError(where + ": " + e.what());
    }
    r.instance_id = row[c_id];
    r.objective = csv::parse_double(row[c_obj], where);
    r.seconds = csv::parse_double(row[c_sec], where);
    r.feature_seconds = csv::parse_double(row[c_feat], where);
    r.predict_seconds = csv::parse_double(row[c_pred], where);
    r.surrogate_seconds = csv::parse_double(row[c_sur], where);
    r.clamped = static_cast<int>(csv::parse_double(row[c_cl], where));
    try {
      r.seed = std::stoull(row[c_seed]);
    } catch (const std::exception&) {
      throw ArtifactError(where + ": bad seed '" + row[c_seed] + "'");
    }
    r.x = csv::split_doubles(row[c_x], where);
    r.demand = csv::split_doubles(row[c_d], where);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace repscen::eval
