#include "repscen/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "repscen/mip_solver.hpp"
#include "repscen/parallel.hpp"

namespace repscen {
namespace {

std::vector<char> flags(int n, const std::vector<int>& idx) {
  std::vector<char> f(n, 0);
  for (int i : idx) f[i] = 1;
  return f;
}

void add_first_stage(const TwoStageInstance& inst, MipProblem& p) {
  const auto is_int = flags(inst.n1(), inst.int_first);
  for (int j = 0; j < inst.n1(); ++j) p.add_column(inst.c[j], -kInf, kInf, is_int[j], fmt::format("x{}", j));
  p.branch_priority.assign(inst.n1(), 0);
  for (int j : inst.int_first) p.branch_priority[j] = 1;
  for (int i = 0; i < inst.m1(); ++i) {
    SparseRow row;
    for (int j = 0; j < inst.n1(); ++j)
      if (inst.A(i, j) != 0.0) row.index.push_back(j), row.value.push_back(inst.A(i, j));
    p.add_row(std::move(row), RowSense::kLessEqual, inst.b[i], fmt::format("first{}", i));
  }
}

// W y_s + T_s x (sense) h_s, with y_s starting at column `offset`.
void add_scenario_block(const TwoStageInstance& inst, const Scenario& xi, double weight, int tag, MipProblem& p) {
  const auto is_int = flags(inst.n2(), inst.int_second);
  const auto is_eq = flags(inst.m2(), inst.eq_second);
  const int offset = p.num_cols();
  const DenseMatrix& W = recourse_matrix(inst, xi);
  for (int j = 0; j < inst.n2(); ++j)
    p.add_column(weight * xi.q[j], 0.0, kInf, is_int[j], fmt::format("y{}_{}", tag, j));
  p.branch_priority.resize(p.num_cols(), 0);
  for (int i = 0; i < inst.m2(); ++i) {
    SparseRow row;
    for (int j = 0; j < inst.n1(); ++j)
      if (xi.T(i, j) != 0.0) row.index.push_back(j), row.value.push_back(xi.T(i, j));
    for (int j = 0; j < inst.n2(); ++j)
      if (W(i, j) != 0.0) row.index.push_back(offset + j), row.value.push_back(W(i, j));
    p.add_row(std::move(row), is_eq[i] ? RowSense::kEqual : RowSense::kLessEqual, xi.h[i],
              fmt::format("s{}_{}", tag, i));
  }
}

void check_scenario_shape(const TwoStageInstance& inst, const Scenario& xi, const std::string& what) {
  if (static_cast<int>(xi.q.size()) != inst.n2() || static_cast<int>(xi.h.size()) != inst.m2() ||
      static_cast<int>(xi.T.rows()) != inst.m2() || static_cast<int>(xi.T.cols()) != inst.n1())
    throw ModelError(what + " has dimensions inconsistent with the instance");
  if (xi.W.rows() + xi.W.cols() > 0 &&
      (static_cast<int>(xi.W.rows()) != inst.m2() || static_cast<int>(xi.W.cols()) != inst.n2()))
    throw ModelError(what + " has a recourse matrix of the wrong shape");
}

void check_indices(const std::vector<int>& idx, int bound, const char* what) {
  for (int i : idx)
    if (i < 0 || i >= bound) throw ModelError(fmt::format("{} index {} out of range [0, {})", what, i, bound));
}

DenseMatrix matrix_from_json(const nlohmann::json& j, std::size_t cols_if_empty) {
  if (!j.is_array()) throw ModelError("matrix must be an array of rows");
  if (j.empty()) return DenseMatrix(0, cols_if_empty);
  const std::size_t cols = j[0].size();
  DenseMatrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ModelError("matrix rows have unequal lengths");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const DenseMatrix& m) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

}  // namespace

void TwoStageInstance::validate() const {
  if (n1() + n2() == 0) throw ModelError("instance has no variables");
  if (A.cols() != c.size() && A.rows() > 0) throw ModelError("A has wrong number of columns");
  if (A.rows() != b.size()) throw ModelError("A and b disagree on the number of rows");
  if (scenarios.empty()) throw ModelError("instance needs at least one scenario");
  if (static_cast<int>(W.rows()) != m2() || (W.rows() > 0 && static_cast<int>(W.cols()) != n2()))
    throw ModelError("W has wrong shape");
  double total = 0.0;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    check_scenario_shape(*this, scenarios[s], fmt::format("scenario {}", s));
    if (!(scenarios[s].probability >= 0.0)) throw ModelError(fmt::format("scenario {} has negative probability", s));
    total += scenarios[s].probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ModelError(fmt::format("scenario probabilities sum to {}", total));
  check_indices(int_first, n1(), "int_first");
  check_indices(int_second, n2(), "int_second");
  check_indices(eq_second, m2(), "eq_second");
}

MipProblem build_extensive_form(const TwoStageInstance& inst) {
  inst.validate();
  MipProblem p;
  add_first_stage(inst, p);
  for (std::size_t s = 0; s < inst.scenarios.size(); ++s)
    add_scenario_block(inst, inst.scenarios[s], inst.scenarios[s].probability, static_cast<int>(s), p);
  return p;
}

MipProblem build_surrogate(const TwoStageInstance& inst, const Scenario& xi_bar) {
  inst.validate();
  check_scenario_shape(inst, xi_bar, "surrogate scenario");
  MipProblem p;
  add_first_stage(inst, p);
  add_scenario_block(inst, xi_bar, 1.0, 0, p);
  return p;
}

const DenseMatrix& recourse_matrix(const TwoStageInstance& inst, const Scenario& xi) {
  return xi.W.rows() + xi.W.cols() > 0 ? xi.W : inst.W;
}

Scenario mean_scenario(const TwoStageInstance& inst) {
  inst.validate();
  Scenario mean;
  mean.q.assign(inst.n2(), 0.0);
  mean.h.assign(inst.m2(), 0.0);
  mean.T = DenseMatrix(inst.m2(), inst.n1());
  const bool own_w = std::any_of(inst.scenarios.begin(), inst.scenarios.end(),
                                 [](const Scenario& xi) { return xi.W.rows() + xi.W.cols() > 0; });
  if (own_w) mean.W = DenseMatrix(inst.m2(), inst.n2());
  for (const auto& xi : inst.scenarios) {
    const double p = xi.probability;
    for (int j = 0; j < inst.n2(); ++j) mean.q[j] += p * xi.q[j];
    for (int i = 0; i < inst.m2(); ++i) mean.h[i] += p * xi.h[i];
    for (std::size_t k = 0; k < mean.T.data().size(); ++k) mean.T.data()[k] += p * xi.T.data()[k];
    if (own_w) {
      const DenseMatrix& W = recourse_matrix(inst, xi);
      for (std::size_t k = 0; k < mean.W.data().size(); ++k) mean.W.data()[k] += p * W.data()[k];
    }
  }
  return mean;
}

MipProblem build_second_stage(const TwoStageInstance& inst, const Scenario& xi, std::span<const double> x) {
  if (static_cast<int>(x.size()) != inst.n1()) throw ModelError("first-stage vector has wrong length");
  check_scenario_shape(inst, xi, "scenario");
  const auto is_int = flags(inst.n2(), inst.int_second);
  const auto is_eq = flags(inst.m2(), inst.eq_second);
  const DenseMatrix& W = recourse_matrix(inst, xi);
  MipProblem p;
  for (int j = 0; j < inst.n2(); ++j) p.add_column(xi.q[j], 0.0, kInf, is_int[j], fmt::format("y{}", j));
  for (int i = 0; i < inst.m2(); ++i) {
    SparseRow row;
    for (int j = 0; j < inst.n2(); ++j)
      if (W(i, j) != 0.0) row.index.push_back(j), row.value.push_back(W(i, j));
    double rhs = xi.h[i];
    for (int j = 0; j < inst.n1(); ++j) rhs -= xi.T(i, j) * x[j];
    p.add_row(std::move(row), is_eq[i] ? RowSense::kEqual : RowSense::kLessEqual, rhs, fmt::format("r{}", i));
  }
  return p;
}

std::vector<double> first_stage_part(const TwoStageInstance& inst, std::span<const double> mip_x) {
  if (static_cast<int>(mip_x.size()) < inst.n1()) throw ModelError("solution shorter than the first stage");
  return {mip_x.begin(), mip_x.begin() + inst.n1()};
}

double first_stage_violation(const TwoStageInstance& inst, std::span<const double> x) {
  double worst = 0.0;
  for (int i = 0; i < inst.m1(); ++i) {
    double act = 0.0;
    for (int j = 0; j < inst.n1(); ++j) act += inst.A(i, j) * x[j];
    worst = std::max(worst, act - inst.b[i]);
  }
  return worst;
}

OvfBreakdown evaluate_ovf_detailed(const TwoStageInstance& inst, std::span<const double> x,
                                   const OvfOptions& options) {
  inst.validate();
  if (static_cast<int>(x.size()) != inst.n1()) throw ModelError("first-stage vector has wrong length");
  if (first_stage_violation(inst, x) > kFeasibilityTol) throw ModelError("first-stage decision violates A x <= b");
  for (int j : inst.int_first)
    if (std::abs(x[j] - std::round(x[j])) > kIntegralityTol)
      throw ModelError(fmt::format("first-stage variable {} is not integral", j));

  OvfBreakdown out;
  out.first_stage_cost = dot(inst.c, x);
  out.recourse.assign(inst.scenarios.size(), 0.0);
  parallel_for(inst.scenarios.size(), options.jobs, [&](std::size_t s) {
    const MipProblem sub = build_second_stage(inst, inst.scenarios[s], x);
    const MipSolution sol = solve_mip(sub, options.solver);
    if (sol.status == SolveStatus::kInfeasible)
      throw RecourseError(fmt::format("second stage of scenario {} is infeasible for the given first-stage "
                                      "decision (complete recourse violated)",
                                      s));
    if (sol.status == SolveStatus::kUnbounded)
      throw ModelError(fmt::format("second stage of scenario {} is unbounded", s));
    if (!sol.has_solution()) throw Error(fmt::format("second stage of scenario {} ended without a solution", s));
    out.recourse[s] = sol.best_objective;
  });
  out.total = out.first_stage_cost;
  for (std::size_t s = 0; s < inst.scenarios.size(); ++s)
    out.total += inst.scenarios[s].probability * out.recourse[s];
  return out;
}

double evaluate_ovf(const TwoStageInstance& inst, std::span<const double> x, const OvfOptions& options) {
  return evaluate_ovf_detailed(inst, x, options).total;
}

double evaluate_ovf(const TwoStageInstance& inst, FirstStageSolution& solution, const OvfOptions& options) {
  const double v = evaluate_ovf(inst, solution.x, options);
  solution.objective_ovf = v;
  return v;
}

MipSolution solve_extensive_form(const TwoStageInstance& inst, const SolverConfig& config,
                                 const OvfOptions& recourse) {
  const MipProblem ef = build_extensive_form(inst);
  if (config.backend == Backend::kExternal) return solve_mip(ef, config);
  const int n1 = inst.n1();
  const int n2 = inst.n2();
  std::set<std::vector<double>> tried;

  auto complete = [&](const std::vector<double>& x1) -> std::optional<std::vector<double>> {
    if (first_stage_violation(inst, x1) > kFeasibilityTol) return std::nullopt;
    if (!tried.insert(x1).second) return std::nullopt;
    std::vector<double> full(ef.num_cols(), 0.0);
    std::copy(x1.begin(), x1.end(), full.begin());
    for (std::size_t s = 0; s < inst.scenarios.size(); ++s) {
      const MipSolution sol = solve_mip(build_second_stage(inst, inst.scenarios[s], x1), recourse.solver);
      if (!sol.has_solution()) return std::nullopt;
      std::copy(sol.x.begin(), sol.x.end(), full.begin() + n1 + static_cast<std::ptrdiff_t>(s) * n2);
    }
    return full;
  };

  MipCallbacks callbacks;
  callbacks.heuristic = [&](std::span<const double> lp_x) -> std::optional<std::vector<double>> {
    std::optional<std::vector<double>> best;
    double best_obj = kInf;
    for (int variant = 0; variant < 2; ++variant) {
      std::vector<double> x1(lp_x.begin(), lp_x.begin() + n1);
      for (int j : inst.int_first)
        x1[j] = variant == 0 ? std::round(x1[j]) : std::ceil(x1[j] - kIntegralityTol);
      auto cand = complete(x1);
      if (!cand) continue;
      const double obj = ef.evaluate(*cand);
      if (obj < best_obj) best_obj = obj, best = std::move(cand);
    }
    return best;
  };
  return solve_mip(ef, config, callbacks);
}

nlohmann::json to_json(const TwoStageInstance& inst) {
  nlohmann::json j;
  j["c"] = inst.c;
  j["A"] = matrix_to_json(inst.A);
  j["b"] = inst.b;
  j["W"] = matrix_to_json(inst.W);
  j["int_first"] = inst.int_first;
  j["int_second"] = inst.int_second;
  j["eq_second"] = inst.eq_second;
  auto scen = nlohmann::json::array();
  for (const auto& xi : inst.scenarios) {
    nlohmann::json s = {{"p", xi.probability}, {"q", xi.q}, {"h", xi.h}, {"T", matrix_to_json(xi.T)}};
    if (xi.W.rows() + xi.W.cols() > 0) s["W"] = matrix_to_json(xi.W);
    scen.push_back(std::move(s));
  }
  j["scenarios"] = std::move(scen);
  return j;
}

TwoStageInstance two_stage_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"c", "A", "b", "W", "int_first", "int_second", "eq_second",
                                                 "scenarios"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ModelError("unknown key '" + key + "' in two-stage instance");
  TwoStageInstance inst;
  try {
    inst.c = j.at("c").get<std::vector<double>>();
    inst.A = matrix_from_json(j.at("A"), inst.c.size());
    inst.b = j.at("b").get<std::vector<double>>();
    const auto& scen = j.at("scenarios");
    const std::size_t n2 = scen.empty() ? 0 : scen[0].at("q").size();
    inst.W = matrix_from_json(j.at("W"), n2);
    inst.int_first = j.value("int_first", std::vector<int>{});
    inst.int_second = j.value("int_second", std::vector<int>{});
    inst.eq_second = j.value("eq_second", std::vector<int>{});
    for (const auto& s : scen) {
      Scenario xi;
      xi.probability = s.at("p").get<double>();
      xi.q = s.at("q").get<std::vector<double>>();
      xi.h = s.at("h").get<std::vector<double>>();
      xi.T = matrix_from_json(s.at("T"), inst.c.size());
      for (const auto& [key, _] : s.items())
        if (key != "p" && key != "q" && key != "h" && key != "T" && key != "W")
          throw ModelError("unknown key '" + key + "' in scenario");
      if (s.contains("W")) xi.W = matrix_from_json(s.at("W"), n2);
      inst.scenarios.push_back(std::move(xi));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed two-stage instance: ") + e.what());
  }
  inst.validate();
  return inst;
}

}  // namespace repscen
