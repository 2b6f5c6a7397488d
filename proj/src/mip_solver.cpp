#include "repscen/mip_solver.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "repscen/lp_solver.hpp"
#include "repscen/mps.hpp"

namespace repscen {
namespace {

struct BoundChange {
  int var;
  double lo;
  double hi;
};

struct Node {
  double bound;
  std::int64_t id;
  std::vector<BoundChange> changes;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MipProblem& problem, const SolverConfig& config, const MipCallbacks* callbacks,
                 std::vector<int>* trace)
      : problem_(problem), config_(config), callbacks_(callbacks), trace_(trace) {}

  MipSolution run();

 private:
  void apply(const Node& node);
  void try_incumbent(const std::vector<double>& x_lp);
  void offer(std::vector<double> x);
  void run_heuristic(const std::vector<double>& x_lp);
  double global_bound(const Node* current) const;
  bool gap_reached(const Node* current) const;
  double prune_limit() const {
    if (!std::isfinite(incumbent_)) return kInf;
    return incumbent_ - 1e-9 * std::max(1.0, std::abs(incumbent_));
  }

  const MipProblem& problem_;
  const SolverConfig& config_;
  const MipCallbacks* callbacks_;
  std::vector<int>* trace_;
  Stopwatch clock_;
  BoundPropagation root_;
  MipProblem reduced_;
  std::unique_ptr<SimplexSolver> simplex_;
  std::vector<int> int_vars_;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  MipSolution result_;
  double incumbent_ = kInf;
  double lost_bound_ = kInf;
};

BoundPropagation propagate_singleton_rows_impl(const MipProblem& p) {
  BoundPropagation out;
  out.lower = p.lower;
  out.upper = p.upper;
  for (int i = 0; i < p.num_rows(); ++i) {
    const auto& row = p.rows[i];
    int nz = 0;
    int col = -1;
    double a = 0.0;
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      if (row.value[k] == 0.0) continue;
      // Duplicate column entries are summed by the LP; keep such rows.
      if (nz == 1 && row.index[k] == col) {
        nz = 2;
        break;
      }
      ++nz;
      col = row.index[k];
      a = row.value[k];
    }
    if (nz >= 2) {
      out.kept_rows.push_back(i);
      continue;
    }
    const double b = p.rhs[i];
    const RowSense s = p.senses[i];
    if (nz == 0) {
      const bool ok = (s == RowSense::kLessEqual && 0.0 <= b + kFeasibilityTol) ||
                      (s == RowSense::kGreaterEqual && 0.0 >= b - kFeasibilityTol) ||
                      (s == RowSense::kEqual && std::abs(b) <= kFeasibilityTol);
      if (!ok) out.infeasible = true;
      continue;
    }
    const double v = b / a;
    const bool upper_side = (s == RowSense::kLessEqual) == (a > 0.0);
    if (s == RowSense::kEqual || upper_side) out.upper[col] = std::min(out.upper[col], v);
    if (s == RowSense::kEqual || !upper_side) out.lower[col] = std::max(out.lower[col], v);
  }
  for (int j = 0; j < p.num_cols(); ++j) {
    if (p.integral[j]) {
      if (std::isfinite(out.lower[j])) out.lower[j] = std::ceil(out.lower[j] - 1e-9);
      if (std::isfinite(out.upper[j])) out.upper[j] = std::floor(out.upper[j] + 1e-9);
    }
    if (out.lower[j] > out.upper[j] + kFeasibilityTol) out.infeasible = true;
    else if (out.lower[j] > out.upper[j]) out.upper[j] = out.lower[j];
  }
  return out;
}

void BranchAndBound::apply(const Node& node) {
  for (int j : int_vars_) simplex_->set_col_bounds(j, root_.lower[j], root_.upper[j]);
  for (const auto& c : node.changes) simplex_->set_col_bounds(c.var, c.lo, c.hi);
}

double BranchAndBound::global_bound(const Node* current) const {
  double b = std::min(incumbent_, lost_bound_);
  if (!open_.empty()) b = std::min(b, open_.top().bound);
  if (current != nullptr) b = std::min(b, current->bound);
  return b;
}

bool BranchAndBound::gap_reached(const Node* current) const {
  if (!std::isfinite(incumbent_)) return false;
  return relative_gap(incumbent_, global_bound(current)) <= config_.gap_limit;
}

void BranchAndBound::try_incumbent(const std::vector<double>& x_lp) {
  // Polish: fix integer columns at their rounded values and re-solve the LP.
  std::vector<double> x = x_lp;
  std::vector<std::pair<double, double>> saved;
  saved.reserve(int_vars_.size());
  for (int j : int_vars_) {
    saved.emplace_back(simplex_->col_lower(j), simplex_->col_upper(j));
    const double r = std::round(x_lp[j]);
    simplex_->set_col_bounds(j, r, r);
  }
  if (simplex_->solve() == LpStatus::kOptimal) {
    x = simplex_->primal();
    for (int j : int_vars_) x[j] = std::round(x[j]);
  }
  for (std::size_t k = 0; k < int_vars_.size(); ++k)
    simplex_->set_col_bounds(int_vars_[k], saved[k].first, saved[k].second);

  if (problem_.max_violation(x) > kFeasibilityTol) x = x_lp;
  offer(std::move(x));
}

void BranchAndBound::offer(std::vector<double> x) {
  const double obj = problem_.evaluate(x);
  if (obj < incumbent_) {
    incumbent_ = obj;
    result_.x = std::move(x);
    result_.incumbent_trajectory.push_back({clock_.seconds(), obj});
  }
}

void BranchAndBound::run_heuristic(const std::vector<double>& x_lp) {
  if (callbacks_ == nullptr || !callbacks_->heuristic) return;
  const auto k = result_.nodes;
  if (k > callbacks_->heuristic_nodes && (callbacks_->heuristic_every <= 0 || k % callbacks_->heuristic_every != 0))
    return;
  auto candidate = callbacks_->heuristic(x_lp);
  if (!candidate || static_cast<int>(candidate->size()) != problem_.num_cols()) return;
  if (problem_.max_violation(*candidate) > kFeasibilityTol) return;
  if (problem_.max_fractionality(*candidate) > kIntegralityTol) return;
  offer(std::move(*candidate));
}

MipSolution BranchAndBound::run() {
  problem_.validate();
  root_ = propagate_singleton_rows_impl(problem_);
  result_.status = SolveStatus::kInfeasible;
  if (root_.infeasible) {
    result_.seconds = clock_.seconds();
    return result_;
  }
  reduced_.objective = problem_.objective;
  reduced_.lower = root_.lower;
  reduced_.upper = root_.upper;
  reduced_.integral = problem_.integral;
  for (int i : root_.kept_rows) {
    reduced_.rows.push_back(problem_.rows[i]);
    reduced_.senses.push_back(problem_.senses[i]);
    reduced_.rhs.push_back(problem_.rhs[i]);
  }
  for (int j = 0; j < problem_.num_cols(); ++j)
    if (problem_.integral[j]) int_vars_.push_back(j);
  simplex_ = std::make_unique<SimplexSolver>(reduced_);

  const double offset = problem_.objective_offset;
  std::int64_t next_id = 1;
  Node current{-kInf, 0, {}};
  bool have_current = true;
  bool stopped_early = false;
  SolveStatus stop_status = SolveStatus::kOptimal;

  while (have_current) {
    if (clock_.seconds() >= config_.time_limit) {
      stopped_early = true;
      stop_status = SolveStatus::kTimeLimit;
      break;
    }
    if (config_.node_limit > 0 && result_.nodes >= config_.node_limit) {
      stopped_early = true;
      stop_status = SolveStatus::kNodeLimit;
      break;
    }

    apply(current);
    const LpStatus st = simplex_->solve();
    ++result_.nodes;

    bool branched = false;
    if (st == LpStatus::kUnbounded && result_.nodes == 1) {
      result_.status = SolveStatus::kUnbounded;
      result_.best_objective = -kInf;
      result_.lp_iterations = simplex_->iterations();
      result_.seconds = clock_.seconds();
      return result_;
    }
    if (st == LpStatus::kIterationLimit) {
      lost_bound_ = std::min(lost_bound_, current.bound);
    } else if (st == LpStatus::kOptimal) {
      const double obj = simplex_->objective() + offset;
      const double node_bound = std::max(obj, current.bound);
      if (node_bound < prune_limit()) {
        const std::vector<double> x = simplex_->primal();
        int branch_var = -1;
        int best_priority = 0;
        double best_frac = kIntegralityTol;
        for (int j : int_vars_) {
          const double f = x[j] - std::floor(x[j]);
          const double dist = std::min(f, 1.0 - f);
          if (dist <= kIntegralityTol) continue;
          const int prio = problem_.branch_priority.empty() ? 0 : problem_.branch_priority[j];
          if (branch_var < 0 || prio > best_priority || (prio == best_priority && dist > best_frac)) {
            best_priority = prio;
            best_frac = dist;
            branch_var = j;
          }
        }
        if (branch_var >= 0) run_heuristic(x);
        if (branch_var >= 0 && node_bound >= prune_limit()) {
          // The heuristic closed this node.
        } else if (branch_var < 0) {
          try_incumbent(x);
        } else {
          if (trace_ != nullptr) trace_->push_back(branch_var);
          const double v = x[branch_var];
          const double lo = simplex_->col_lower(branch_var);
          const double hi = simplex_->col_upper(branch_var);
          Node down{node_bound, next_id++, current.changes};
          down.changes.push_back({branch_var, lo, std::floor(v)});
          Node up{node_bound, next_id++, current.changes};
          up.changes.push_back({branch_var, std::ceil(v), hi});
          const bool dive_up = (v - std::floor(v)) >= 0.5;
          open_.push(dive_up ? std::move(down) : std::move(up));
          current = dive_up ? std::move(up) : std::move(down);
          branched = true;
        }
      }
    }
    // Infeasible nodes and pruned nodes fall through.

    if (branched) {
      if (gap_reached(&current)) {
        stopped_early = true;
        stop_status = SolveStatus::kGapLimit;
        break;
      }
      continue;
    }
    if (gap_reached(nullptr) && !open_.empty()) {
      stopped_early = true;
      stop_status = SolveStatus::kGapLimit;
      have_current = false;
      break;
    }
    if (open_.empty()) {
      have_current = false;
    } else {
      current = open_.top();
      open_.pop();
      // Nodes that can no longer improve the incumbent are discarded.
      while (current.bound >= prune_limit()) {
        if (open_.empty()) {
          have_current = false;
          break;
        }
        current = open_.top();
        open_.pop();
      }
    }
  }

  result_.lp_iterations = simplex_->iterations();
  result_.seconds = clock_.seconds();
  result_.best_objective = incumbent_;
  if (stopped_early) {
    const bool diving = stop_status != SolveStatus::kGapLimit || have_current;
    result_.best_bound = std::min(global_bound(diving ? &current : nullptr), incumbent_);
  } else {
    result_.best_bound = std::min(incumbent_, lost_bound_);
  }
  if (!std::isfinite(incumbent_)) {
    result_.status = stopped_early ? stop_status : SolveStatus::kInfeasible;
    result_.gap = kInf;
    return result_;
  }
  result_.gap = relative_gap(incumbent_, result_.best_bound);
  if (result_.gap <= 1e-6) result_.status = SolveStatus::kOptimal;
  else if (stopped_early) result_.status = stop_status;
  else result_.status = SolveStatus::kGapLimit;
  return result_;
}

}  // namespace

BoundPropagation propagate_singleton_rows(const MipProblem& problem) {
  return propagate_singleton_rows_impl(problem);
}

MipSolution solve_mip(const MipProblem& problem, const SolverConfig& config) {
  return solve_mip(problem, config, MipCallbacks{});
}

MipSolution solve_mip(const MipProblem& problem, const SolverConfig& config, const MipCallbacks& callbacks) {
  config.validate();
  if (config.backend == Backend::kExternal) return solve_external(problem, config);
  BranchAndBound bb(problem, config, &callbacks, nullptr);
  return bb.run();
}

MipSolution solve_mip_traced(const MipProblem& problem, const SolverConfig& config,
                             std::vector<int>& branching_trace) {
  config.validate();
  BranchAndBound bb(problem, config, nullptr, &branching_trace);
  return bb.run();
}

}  // namespace repscen
