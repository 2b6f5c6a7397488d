#pragma once

#include <functional>
#include <optional>
#include <span>

#include "repscen/mip_problem.hpp"

namespace repscen {

/// Result of turning singleton rows into column bounds.
struct BoundPropagation {
  bool infeasible = false;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> kept_rows;
};

BoundPropagation propagate_singleton_rows(const MipProblem& problem);

/// Problem-specific hooks for the internal backend.
struct MipCallbacks {
  /// Receives the LP solution of a node and may return a full candidate
  /// point; it is accepted when feasible and better than the incumbent.
  std::function<std::optional<std::vector<double>>(std::span<const double> lp_x)> heuristic;
  /// The heuristic runs at the first `heuristic_nodes` nodes and then at
  /// every `heuristic_every`-th node.
  int heuristic_nodes = 20;
  int heuristic_every = 50;
};

/// Solves `problem` with the backend selected in `config`.
///
/// The internal backend is LP-based branch-and-bound: most-fractional
/// branching within the highest priority class (lowest index on ties), best-bound node selection with plunging
/// into the child nearest the LP value, and termination on optimality, the
/// relative gap limit, the time limit or the node limit. Every incumbent
/// improvement is appended to the trajectory with its monotonic timestamp.
MipSolution solve_mip(const MipProblem& problem, const SolverConfig& config);
MipSolution solve_mip(const MipProblem& problem, const SolverConfig& config, const MipCallbacks& callbacks);

/// Same as solve_mip with the internal backend, additionally recording the
/// branching variable of every branched node in `branching_trace`.
MipSolution solve_mip_traced(const MipProblem& problem, const SolverConfig& config,
                             std::vector<int>& branching_trace);

}  // namespace repscen
