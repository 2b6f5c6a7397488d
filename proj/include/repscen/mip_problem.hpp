#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repscen/common.hpp"

namespace repscen {

enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;

  bool operator==(const SparseRow&) const = default;
};

/// Mixed-integer linear program in minimization form.
///
///   min  objective^T x + objective_offset
///   s.t. rows[i] . x  (sense[i])  rhs[i]
///        lower <= x <= upper,  x_j integral where integral[j]
///
/// Infinite bounds are represented by +/-kInf.
struct MipProblem {
  std::vector<double> objective;
  double objective_offset = 0.0;
  std::vector<SparseRow> rows;
  std::vector<RowSense> senses;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<char> integral;
  std::vector<std::string> col_names;
  std::vector<std::string> row_names;
  /// Optional per-column branching priority; among fractional columns the
  /// highest priority is branched first. Empty means all zero.
  std::vector<int> branch_priority;

  int num_cols() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  int num_integral() const;

  int add_column(double cost, double lo, double hi, bool is_integral, std::string name = {});
  int add_row(SparseRow row, RowSense sense, double rhs_value, std::string name = {});

  /// Throws ModelError on inconsistent sizes, lo > hi, non-finite rhs, or
  /// out-of-range column indices.
  void validate() const;

  /// Objective value of x (including the offset).
  double evaluate(const std::vector<double>& x) const;

  /// Largest constraint or bound violation of x.
  double max_violation(const std::vector<double>& x) const;

  /// Largest distance to the nearest integer over integral columns.
  double max_fractionality(const std::vector<double>& x) const;

  bool operator==(const MipProblem&) const = default;
};

enum class SolveStatus { kOptimal, kGapLimit, kTimeLimit, kInfeasible, kUnbounded, kNodeLimit };

std::string to_string(SolveStatus s);

struct IncumbentPoint {
  double seconds = 0.0;
  double objective = 0.0;
};

struct MipSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  double best_objective = kInf;
  double best_bound = -kInf;
  double gap = kInf;
  std::vector<double> x;
  std::vector<IncumbentPoint> incumbent_trajectory;
  double seconds = 0.0;
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;

  bool has_solution() const { return !x.empty(); }
};

/// Relative gap |obj - bound| / max(|obj|, 1e-10); infinite without incumbent.
double relative_gap(double best_objective, double best_bound);

enum class Backend { kInternal, kExternal };

struct SolverConfig {
  double gap_limit = 0.02;
  double time_limit = 600.0;
  int threads = 1;
  Backend backend = Backend::kInternal;
  /// Command template for the external backend; placeholders {input}
  /// {output} {gap} {timelimit} {threads}.
  std::string external_command;
  std::uint64_t seed = 0;
  /// Zero means unlimited. Node limits keep runs deterministic where a wall
  /// clock limit would not.
  std::int64_t node_limit = 0;

  void validate() const;

  /// Settings used for subproblems that must be solved to proven optimality
  /// (second-stage evaluations, surrogates).
  static SolverConfig exact();
};

}  // namespace repscen
