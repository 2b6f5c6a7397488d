#pragma once

#include <cstdint>
#include <vector>

#include "repscen/mip_problem.hpp"

namespace repscen {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double objective = kInf;
  std::vector<double> x;
  /// Row duals: derivative of the optimal objective with respect to the
  /// row right-hand side (zero for non-binding rows).
  std::vector<double> duals;
  /// Reduced costs of the structural columns.
  std::vector<double> reduced_costs;
  std::int64_t iterations = 0;
};

/// Solves the LP relaxation of `problem` (integrality flags ignored).
LpResult solve_lp(const MipProblem& problem);

/// Bounded-variable simplex on a dense condensed tableau.
///
/// Every row i gets a logical variable s_i = a_i . x whose bounds encode the
/// row sense, so the working system is A x - s = 0 with bounds on all
/// variables. The tableau stores B^{-1} N for the nonbasic columns only, so
/// its size is rows x structural columns. Bound changes keep the basis, which
/// makes re-solves after branching cheap (dual simplex from a dual feasible
/// basis).
class SimplexSolver {
 public:
  explicit SimplexSolver(const MipProblem& problem);

  int num_cols() const { return n_; }
  int num_rows() const { return m_; }

  void set_col_bounds(int j, double lo, double hi);
  double col_lower(int j) const { return lo_[j]; }
  double col_upper(int j) const { return hi_[j]; }

  LpStatus solve();

  double objective() const;
  std::vector<double> primal() const;
  std::vector<double> row_duals() const;
  std::vector<double> reduced_costs() const;
  std::int64_t iterations() const { return iterations_; }

  void set_iteration_limit(std::int64_t limit) { iteration_limit_ = limit; }

 private:
  enum class Phase { kOne, kTwo };

  bool is_basic(int var) const { return pos_[var] >= 0; }
  int nonbasic_col(int var) const { return -pos_[var] - 1; }
  double* tab_row(int r) { return tableau_.data() + static_cast<std::size_t>(r) * n_; }

  void position_nonbasics();
  void compute_basic_values();
  double primal_infeasibility(int row) const;
  bool primal_feasible() const;
  bool dual_feasible() const;

  LpStatus run_dual();
  LpStatus run_primal(Phase phase);
  void pivot(int row, int col);
  void reinvert();
  void reset_to_slack_basis();
  double residual() const;

  int n_ = 0;  // structural columns
  int m_ = 0;  // rows
  // Original constraint matrix, column-wise.
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> cost_;  // n_ + m_
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> value_;
  std::vector<int> head_;      // var basic in row i
  std::vector<int> nonbasic_;  // var nonbasic in column k
  std::vector<int> pos_;       // >= 0: basic row; < 0: -(col + 1)
  std::vector<double> tableau_;
  std::vector<double> reduced_;  // per nonbasic column
  std::vector<int> scratch_;
  std::int64_t iterations_ = 0;
  std::int64_t iteration_limit_ = 0;  // per call of solve()
  std::int64_t solve_start_ = 0;
  int pivots_since_refresh_ = 0;
};

}  // namespace repscen
