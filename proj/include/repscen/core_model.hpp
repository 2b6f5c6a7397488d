#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "repscen/common.hpp"
#include "repscen/mip_problem.hpp"

namespace repscen {

/// One realization xi = (q, h, T) of the uncertain second-stage data.
struct Scenario {
  std::vector<double> q;  // n2
  std::vector<double> h;  // m2
  DenseMatrix T;          // m2 x n1
  double probability = 1.0;
  /// Scenario-specific recourse matrix; empty means the instance's W.
  DenseMatrix W;

  bool operator==(const Scenario&) const = default;
};

/// Two-stage stochastic integer program with finite support:
///
///   min  c^T x + sum_xi p_xi Q(x, xi)   s.t.  A x <= b,  x_i integral (i in int_first)
///   Q(x, xi) = min { q_xi^T y : W y <= h_xi - T_xi x, y >= 0, y_i integral (i in int_second) }
///
/// Rows of W listed in `eq_second` are equalities instead of <=. A scenario
/// may carry its own W_xi, which replaces W for that scenario.
struct TwoStageInstance {
  std::vector<double> c;
  DenseMatrix A;
  std::vector<double> b;
  DenseMatrix W;
  std::vector<Scenario> scenarios;
  std::vector<int> int_first;
  std::vector<int> int_second;
  std::vector<int> eq_second;

  int n1() const { return static_cast<int>(c.size()); }
  int n2() const { return scenarios.empty() ? static_cast<int>(W.cols()) : static_cast<int>(scenarios[0].q.size()); }
  int m1() const { return static_cast<int>(A.rows()); }
  int m2() const { return static_cast<int>(W.rows()); }

  /// Throws ModelError when dimensions disagree, a probability is negative,
  /// probabilities do not sum to 1 within 1e-9, or the scenario set is empty.
  void validate() const;

  bool operator==(const TwoStageInstance&) const = default;
};

struct FirstStageSolution {
  std::vector<double> x;
  std::optional<double> objective_ovf;
};

/// Deterministic equivalent over all scenarios. Columns are x followed by
/// y_xi for every scenario in order; rows are A followed by the W block of
/// every scenario. First-stage integer columns get branching priority 1.
MipProblem build_extensive_form(const TwoStageInstance& inst);

/// Single-scenario problem for xi_bar = (q, h, T); its probability is ignored.
MipProblem build_surrogate(const TwoStageInstance& inst, const Scenario& xi_bar);

/// Recourse matrix used by scenario xi.
const DenseMatrix& recourse_matrix(const TwoStageInstance& inst, const Scenario& xi);

/// Probability-weighted average of q, h and T, and of W_xi when any scenario
/// overrides W.
Scenario mean_scenario(const TwoStageInstance& inst);

/// Second-stage MIP of one scenario with x fixed.
MipProblem build_second_stage(const TwoStageInstance& inst, const Scenario& xi, std::span<const double> x);

/// First n1 entries of a solution of the extensive form or a surrogate.
std::vector<double> first_stage_part(const TwoStageInstance& inst, std::span<const double> mip_x);

/// Largest violation of A x <= b and of integrality on int_first.
double first_stage_violation(const TwoStageInstance& inst, std::span<const double> x);

struct OvfOptions {
  SolverConfig solver = SolverConfig::exact();
  int jobs = 1;
};

struct OvfBreakdown {
  double first_stage_cost = 0.0;
  std::vector<double> recourse;  // Q(x, xi) per scenario
  double total = 0.0;
};

/// Phi(x) = c^T x + sum_xi p_xi Q(x, xi), each Q solved to optimality.
/// Throws RecourseError if some second stage is infeasible and ModelError if
/// x is not first-stage feasible.
OvfBreakdown evaluate_ovf_detailed(const TwoStageInstance& inst, std::span<const double> x,
                                   const OvfOptions& options = {});
double evaluate_ovf(const TwoStageInstance& inst, std::span<const double> x, const OvfOptions& options = {});
double evaluate_ovf(const TwoStageInstance& inst, FirstStageSolution& solution, const OvfOptions& options = {});

/// Solves the extensive form. The internal backend additionally runs a
/// completion heuristic: the first-stage part of a node LP is rounded on
/// int_first and every scenario's second stage is solved for it.
MipSolution solve_extensive_form(const TwoStageInstance& inst, const SolverConfig& config,
                                 const OvfOptions& recourse = {});

nlohmann::json to_json(const TwoStageInstance& inst);
TwoStageInstance two_stage_from_json(const nlohmann::json& j);

}  // namespace repscen
