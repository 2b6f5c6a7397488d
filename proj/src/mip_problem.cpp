#include "repscen/mip_problem.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace repscen {

int MipProblem::num_integral() const {
  return static_cast<int>(std::count(integral.begin(), integral.end(), 1));
}

int MipProblem::add_column(double cost, double lo, double hi, bool is_integral, std::string name) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  integral.push_back(is_integral ? 1 : 0);
  col_names.push_back(std::move(name));
  return num_cols() - 1;
}

int MipProblem::add_row(SparseRow row, RowSense sense, double rhs_value, std::string name) {
  rows.push_back(std::move(row));
  senses.push_back(sense);
  rhs.push_back(rhs_value);
  row_names.push_back(std::move(name));
  return num_rows() - 1;
}

void MipProblem::validate() const {
  const auto n = objective.size();
  if (n == 0) throw ModelError("MIP has no variables");
  if (lower.size() != n || upper.size() != n || integral.size() != n)
    throw ModelError("MIP column arrays have inconsistent lengths");
  if (!col_names.empty() && col_names.size() != n) throw ModelError("MIP column names length mismatch");
  if (!branch_priority.empty() && branch_priority.size() != n)
    throw ModelError("MIP branch priority length mismatch");
  const auto m = rows.size();
  if (senses.size() != m || rhs.size() != m) throw ModelError("MIP row arrays have inconsistent lengths");
  if (!row_names.empty() && row_names.size() != m) throw ModelError("MIP row names length mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) throw ModelError(fmt::format("objective[{}] is not finite", j));
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
      throw ModelError(fmt::format("column {} has invalid bounds [{}, {}]", j, lower[j], upper[j]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(rhs[i])) throw ModelError(fmt::format("rhs[{}] is not finite", i));
    const auto& r = rows[i];
    if (r.index.size() != r.value.size()) throw ModelError(fmt::format("row {} index/value mismatch", i));
    for (std::size_t k = 0; k < r.index.size(); ++k) {
      if (r.index[k] < 0 || static_cast<std::size_t>(r.index[k]) >= n)
        throw ModelError(fmt::format("row {} references column {} out of range", i, r.index[k]));
      if (!std::isfinite(r.value[k])) throw ModelError(fmt::format("row {} has a non-finite coefficient", i));
    }
  }
}

double MipProblem::evaluate(const std::vector<double>& x) const {
  double v = objective_offset;
  for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
  return v;
}

double MipProblem::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    worst = std::max(worst, lower[j] - x[j]);
    worst = std::max(worst, x[j] - upper[j]);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double act = 0.0;
    for (std::size_t k = 0; k < rows[i].index.size(); ++k) act += rows[i].value[k] * x[rows[i].index[k]];
    switch (senses[i]) {
      case RowSense::kLessEqual: worst = std::max(worst, act - rhs[i]); break;
      case RowSense::kGreaterEqual: worst = std::max(worst, rhs[i] - act); break;
      case RowSense::kEqual: worst = std::max(worst, std::abs(act - rhs[i])); break;
    }
  }
  return worst;
}

double MipProblem::max_fractionality(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (integral[j]) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  return worst;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kGapLimit: return "gap_limit";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNodeLimit: return "node_limit";
  }
  return "unknown";
}

double relative_gap(double best_objective, double best_bound) {
  if (!std::isfinite(best_objective)) return kInf;
  if (!std::isfinite(best_bound)) return kInf;
  return std::abs(best_objective - best_bound) / std::max(std::abs(best_objective), 1e-10);
}

void SolverConfig::validate() const {
  if (!(gap_limit >= 0.0)) throw ConfigError("solver gap_limit must be >= 0");
  if (!(time_limit > 0.0)) throw ConfigError("solver time_limit must be > 0");
  if (threads < 1) throw ConfigError("solver threads must be >= 1");
  if (node_limit < 0) throw ConfigError("solver node_limit must be >= 0");
  if (backend == Backend::kExternal && external_command.empty())
    throw ConfigError("external backend requires a command template");
}

SolverConfig SolverConfig::exact() {
  SolverConfig cfg;
  cfg.gap_limit = 0.0;
  cfg.time_limit = 1e9;
  return cfg;
}

}  // namespace repscen
