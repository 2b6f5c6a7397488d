#include "repscen/lp_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace repscen {
namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr int kBlandAfter = 200;
constexpr int kRefreshEvery = 500;

}  // namespace

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

SimplexSolver::SimplexSolver(const MipProblem& problem)
    : n_(problem.num_cols()), m_(problem.num_rows()) {
  const int total = n_ + m_;
  cols_.assign(n_, {});
  for (int i = 0; i < m_; ++i) {
    const auto& row = problem.rows[i];
    for (std::size_t k = 0; k < row.index.size(); ++k)
      if (row.value[k] != 0.0) cols_[row.index[k]].emplace_back(i, row.value[k]);
  }
  cost_.assign(total, 0.0);
  lo_.assign(total, 0.0);
  hi_.assign(total, 0.0);
  value_.assign(total, 0.0);
  for (int j = 0; j < n_; ++j) {
    cost_[j] = problem.objective[j];
    lo_[j] = problem.lower[j];
    hi_[j] = problem.upper[j];
  }
  for (int i = 0; i < m_; ++i) {
    const double b = problem.rhs[i];
    switch (problem.senses[i]) {
      case RowSense::kLessEqual: lo_[n_ + i] = -kInf; hi_[n_ + i] = b; break;
      case RowSense::kGreaterEqual: lo_[n_ + i] = b; hi_[n_ + i] = kInf; break;
      case RowSense::kEqual: lo_[n_ + i] = b; hi_[n_ + i] = b; break;
    }
  }
  iteration_limit_ = 200000 + 50LL * total;
  reset_to_slack_basis();
}

void SimplexSolver::reset_to_slack_basis() {
  head_.resize(m_);
  nonbasic_.resize(n_);
  pos_.assign(n_ + m_, 0);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    pos_[n_ + i] = i;
  }
  for (int k = 0; k < n_; ++k) {
    nonbasic_[k] = k;
    pos_[k] = -(k + 1);
  }
  tableau_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
  for (int j = 0; j < n_; ++j)
    for (auto [i, a] : cols_[j]) tableau_[static_cast<std::size_t>(i) * n_ + j] = -a;
  reduced_.assign(cost_.begin(), cost_.begin() + n_);
  for (int j = 0; j < n_; ++j) value_[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
}

void SimplexSolver::set_col_bounds(int j, double lo, double hi) {
  lo_[j] = lo;
  hi_[j] = hi;
}

void SimplexSolver::position_nonbasics() {
  for (int k = 0; k < n_; ++k) {
    const int j = nonbasic_[k];
    const double lo = lo_[j];
    const double hi = hi_[j];
    const double d = reduced_[k];
    double v;
    if (lo == hi) {
      v = lo;
    } else if (std::isfinite(lo) && std::isfinite(hi)) {
      if (d < -kDualTol) v = hi;
      else if (d > kDualTol) v = lo;
      else v = (value_[j] == hi) ? hi : lo;
    } else if (std::isfinite(lo)) {
      v = lo;
    } else if (std::isfinite(hi)) {
      v = hi;
    } else {
      v = std::isfinite(value_[j]) ? value_[j] : 0.0;
    }
    value_[j] = v;
  }
}

void SimplexSolver::compute_basic_values() {
  scratch_.clear();
  for (int k = 0; k < n_; ++k)
    if (value_[nonbasic_[k]] != 0.0) scratch_.push_back(k);
  for (int i = 0; i < m_; ++i) {
    const double* t = tab_row(i);
    double s = 0.0;
    for (int k : scratch_) s += t[k] * value_[nonbasic_[k]];
    value_[head_[i]] = -s;
  }
  pivots_since_refresh_ = 0;
}

double SimplexSolver::primal_infeasibility(int row) const {
  const int h = head_[row];
  const double v = value_[h];
  if (v < lo_[h] - kPrimalTol) return lo_[h] - v;
  if (v > hi_[h] + kPrimalTol) return v - hi_[h];
  return 0.0;
}

bool SimplexSolver::primal_feasible() const {
  for (int i = 0; i < m_; ++i)
    if (primal_infeasibility(i) > 0.0) return false;
  return true;
}

bool SimplexSolver::dual_feasible() const {
  for (int k = 0; k < n_; ++k) {
    const int j = nonbasic_[k];
    if (lo_[j] == hi_[j]) continue;
    const double d = reduced_[k];
    if (value_[j] < hi_[j] && d < -kDualTol) return false;
    if (value_[j] > lo_[j] && d > kDualTol) return false;
  }
  return true;
}

void SimplexSolver::pivot(int row, int col) {
  double* tr = tab_row(row);
  const double alpha = tr[col];
  const double inv = 1.0 / alpha;
  scratch_.clear();
  for (int k = 0; k < n_; ++k)
    if (k != col && tr[k] != 0.0) scratch_.push_back(k);

  const double dq = reduced_[col];
  if (dq != 0.0) {
    const double g = dq * inv;
    for (int k : scratch_) reduced_[k] -= g * tr[k];
  }
  reduced_[col] = -dq * inv;

  for (int i = 0; i < m_; ++i) {
    if (i == row) continue;
    double* ti = tab_row(i);
    const double f = ti[col];
    if (f == 0.0) continue;
    const double g = f * inv;
    for (int k : scratch_) {
      const double v = ti[k] - g * tr[k];
      ti[k] = std::abs(v) < kDropTol ? 0.0 : v;
    }
    ti[col] = -g;
  }
  for (int k : scratch_) tr[k] *= inv;
  tr[col] = inv;

  const int entering = nonbasic_[col];
  const int leaving = head_[row];
  head_[row] = entering;
  nonbasic_[col] = leaving;
  pos_[entering] = row;
  pos_[leaving] = -(col + 1);
  ++iterations_;
  if (++pivots_since_refresh_ >= kRefreshEvery) compute_basic_values();
}

LpStatus SimplexSolver::run_dual() {
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (iterations_ - solve_start_ >= iteration_limit_) return LpStatus::kIterationLimit;
    int r = -1;
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double inf = primal_infeasibility(i);
      if (inf <= 0.0) continue;
      if (bland) {
        if (r < 0 || head_[i] < head_[r]) r = i;
      } else if (inf > worst) {
        worst = inf;
        r = i;
      }
    }
    if (r < 0) return LpStatus::kOptimal;

    const int h = head_[r];
    const double v = value_[h];
    const bool to_lower = v < lo_[h];
    const double target = to_lower ? lo_[h] : hi_[h];
    const double dir = to_lower ? 1.0 : -1.0;
    const double* tr = tab_row(r);

    auto eligible = [&](int k, double& d_eff) {
      const double a = tr[k];
      if (std::abs(a) <= kPivotTol) return false;
      const int j = nonbasic_[k];
      if (lo_[j] == hi_[j]) return false;
      const bool inc = a * dir < 0.0;
      if (inc && !(value_[j] < hi_[j])) return false;
      if (!inc && !(value_[j] > lo_[j])) return false;
      d_eff = std::max(inc ? reduced_[k] : -reduced_[k], 0.0);
      return true;
    };

    double bound = kInf;
    for (int k = 0; k < n_; ++k) {
      double d_eff;
      if (!eligible(k, d_eff)) continue;
      bound = std::min(bound, (d_eff + kDualTol) / std::abs(tr[k]));
    }
    if (!std::isfinite(bound)) return LpStatus::kInfeasible;

    int q = -1;
    double best_alpha = 0.0;
    double step = 0.0;
    for (int k = 0; k < n_; ++k) {
      double d_eff;
      if (!eligible(k, d_eff)) continue;
      const double ratio = d_eff / std::abs(tr[k]);
      if (ratio > bound) continue;
      const bool better = bland ? (q < 0 || nonbasic_[k] < nonbasic_[q]) : std::abs(tr[k]) > best_alpha;
      if (better) {
        q = k;
        best_alpha = std::abs(tr[k]);
        step = ratio;
      }
    }

    const double alpha = tr[q];
    const double t = (v - target) / alpha;
    const int j = nonbasic_[q];
    if (t != 0.0) {
      for (int i = 0; i < m_; ++i) {
        const double a = tableau_[static_cast<std::size_t>(i) * n_ + q];
        if (a != 0.0) value_[head_[i]] -= a * t;
      }
      value_[j] += t;
    }
    value_[h] = target;
    pivot(r, q);

    degenerate = step < 1e-12 ? degenerate + 1 : 0;
    if (degenerate > kBlandAfter) bland = true;
  }
}

LpStatus SimplexSolver::run_primal(Phase phase) {
  int degenerate = 0;
  bool bland = false;
  std::vector<double> phase_one_costs;
  std::vector<double> sign;
  while (true) {
    if (iterations_ - solve_start_ >= iteration_limit_) return LpStatus::kIterationLimit;

    const std::vector<double>* d = &reduced_;
    if (phase == Phase::kOne) {
      sign.assign(m_, 0.0);
      bool any = false;
      for (int i = 0; i < m_; ++i) {
        const int h = head_[i];
        if (value_[h] < lo_[h] - kPrimalTol) sign[i] = -1.0, any = true;
        else if (value_[h] > hi_[h] + kPrimalTol) sign[i] = 1.0, any = true;
      }
      if (!any) return LpStatus::kOptimal;
      phase_one_costs.assign(n_, 0.0);
      for (int i = 0; i < m_; ++i) {
        if (sign[i] == 0.0) continue;
        const double* ti = tab_row(i);
        for (int k = 0; k < n_; ++k) phase_one_costs[k] -= sign[i] * ti[k];
      }
      d = &phase_one_costs;
    }

    int q = -1;
    double best = 0.0;
    for (int k = 0; k < n_; ++k) {
      const int j = nonbasic_[k];
      if (lo_[j] == hi_[j]) continue;
      const double dk = (*d)[k];
      const bool improving = (dk < -kDualTol && value_[j] < hi_[j]) || (dk > kDualTol && value_[j] > lo_[j]);
      if (!improving) continue;
      if (bland) {
        if (q < 0 || j < nonbasic_[q]) q = k;
      } else if (std::abs(dk) > best) {
        best = std::abs(dk);
        q = k;
      }
    }
    if (q < 0) return phase == Phase::kOne ? LpStatus::kInfeasible : LpStatus::kOptimal;

    const int j = nonbasic_[q];
    const double sigma = (*d)[q] < 0.0 ? 1.0 : -1.0;
    const double own = sigma > 0.0 ? hi_[j] - value_[j] : value_[j] - lo_[j];

    // Ratio limit of basic row i for a step of `rate` per unit. Returns the
    // tolerance-relaxed limit (Harris pass 1), the exact limit, and the bound
    // the variable stops at.
    struct Limit {
      double relaxed = kInf;
      double exact = kInf;
      double stop = 0.0;
    };
    auto limit_for = [&](int i, double rate) {
      const int h = head_[i];
      const double v = value_[h];
      Limit lim;
      if (phase == Phase::kOne && v < lo_[h] - kPrimalTol) {
        if (rate > 0.0) lim = {(lo_[h] - v) / rate, (lo_[h] - v) / rate, lo_[h]};
        return lim;
      }
      if (phase == Phase::kOne && v > hi_[h] + kPrimalTol) {
        if (rate < 0.0) lim = {(v - hi_[h]) / -rate, (v - hi_[h]) / -rate, hi_[h]};
        return lim;
      }
      if (rate > 0.0 && std::isfinite(hi_[h]))
        lim = {(hi_[h] - v + kPrimalTol) / rate, std::max(hi_[h] - v, 0.0) / rate, hi_[h]};
      else if (rate < 0.0 && std::isfinite(lo_[h]))
        lim = {(v - lo_[h] + kPrimalTol) / -rate, std::max(v - lo_[h], 0.0) / -rate, lo_[h]};
      return lim;
    };

    double bound = own;
    for (int i = 0; i < m_; ++i) {
      const double a = tableau_[static_cast<std::size_t>(i) * n_ + q];
      if (std::abs(a) <= kPivotTol) continue;
      bound = std::min(bound, limit_for(i, -a * sigma).relaxed);
    }
    if (!std::isfinite(bound)) return LpStatus::kUnbounded;

    int r = -1;
    double best_alpha = 0.0;
    double step = 0.0;
    double stop = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double a = tableau_[static_cast<std::size_t>(i) * n_ + q];
      if (std::abs(a) <= kPivotTol) continue;
      const Limit lim = limit_for(i, -a * sigma);
      if (lim.exact > bound) continue;
      const bool better = bland ? (r < 0 || head_[i] < head_[r]) : std::abs(a) > best_alpha;
      if (better) {
        r = i;
        best_alpha = std::abs(a);
        step = lim.exact;
        stop = lim.stop;
      }
    }
    const bool flip = own <= bound && (r < 0 || own <= step);
    if (flip) step = own;

    if (step != 0.0) {
      for (int i = 0; i < m_; ++i) {
        const double a = tableau_[static_cast<std::size_t>(i) * n_ + q];
        if (a != 0.0) value_[head_[i]] -= a * sigma * step;
      }
      value_[j] += sigma * step;
    }
    if (flip) {
      value_[j] = sigma > 0.0 ? hi_[j] : lo_[j];
      ++iterations_;
    } else {
      value_[head_[r]] = stop;
      pivot(r, q);
    }
    degenerate = step < 1e-12 ? degenerate + 1 : 0;
    if (degenerate > kBlandAfter) bland = true;
  }
}

double SimplexSolver::residual() const {
  std::vector<double> act(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    const double v = value_[j];
    if (v == 0.0) continue;
    for (auto [i, a] : cols_[j]) act[i] += a * v;
  }
  double worst = 0.0;
  for (int i = 0; i < m_; ++i) {
    const double s = value_[n_ + i];
    worst = std::max(worst, std::abs(act[i] - s) / std::max(1.0, std::abs(s)));
  }
  return worst;
}

void SimplexSolver::reinvert() {
  if (m_ == 0) return;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m_, m_);
  Eigen::MatrixXd nonbasis = Eigen::MatrixXd::Zero(m_, n_);
  auto fill = [&](Eigen::MatrixXd& mat, int col, int var) {
    if (var < n_) {
      for (auto [i, a] : cols_[var]) mat(i, col) = a;
    } else {
      mat(var - n_, col) = -1.0;
    }
  };
  for (int i = 0; i < m_; ++i) fill(basis, i, head_[i]);
  for (int k = 0; k < n_; ++k) fill(nonbasis, k, nonbasic_[k]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
  if (!(lu.rcond() > 1e-13)) {
    reset_to_slack_basis();
    return;
  }
  const Eigen::MatrixXd t = lu.solve(nonbasis);
  Eigen::VectorXd cb(m_);
  for (int i = 0; i < m_; ++i) cb(i) = cost_[head_[i]];
  const Eigen::VectorXd dual_part = t.transpose() * cb;
  for (int i = 0; i < m_; ++i) {
    double* ti = tab_row(i);
    for (int k = 0; k < n_; ++k) ti[k] = std::abs(t(i, k)) < kDropTol ? 0.0 : t(i, k);
  }
  for (int k = 0; k < n_; ++k) reduced_[k] = cost_[nonbasic_[k]] - dual_part(k);
}

LpStatus SimplexSolver::solve() {
  solve_start_ = iterations_;
  position_nonbasics();
  compute_basic_values();
  LpStatus status = LpStatus::kOptimal;
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (primal_feasible()) {
      status = run_primal(Phase::kTwo);
    } else if (dual_feasible()) {
      status = run_dual();
    } else {
      status = run_primal(Phase::kOne);
      if (status == LpStatus::kOptimal) status = run_primal(Phase::kTwo);
    }
    if (status != LpStatus::kOptimal) return status;
    if (residual() <= 1e-9 && primal_feasible() && dual_feasible()) return status;
    reinvert();
    position_nonbasics();
    compute_basic_values();
  }
  return status;
}

double SimplexSolver::objective() const {
  double v = 0.0;
  for (int j = 0; j < n_; ++j) v += cost_[j] * value_[j];
  return v;
}

std::vector<double> SimplexSolver::primal() const {
  return {value_.begin(), value_.begin() + n_};
}

std::vector<double> SimplexSolver::row_duals() const {
  std::vector<double> y(m_, 0.0);
  for (int i = 0; i < m_; ++i)
    if (!is_basic(n_ + i)) y[i] = reduced_[nonbasic_col(n_ + i)];
  return y;
}

std::vector<double> SimplexSolver::reduced_costs() const {
  std::vector<double> d(n_, 0.0);
  for (int j = 0; j < n_; ++j)
    if (!is_basic(j)) d[j] = reduced_[nonbasic_col(j)];
  return d;
}

LpResult solve_lp(const MipProblem& problem) {
  problem.validate();
  SimplexSolver solver(problem);
  LpResult result;
  result.status = solver.solve();
  result.iterations = solver.iterations();
  if (result.status == LpStatus::kOptimal) {
    result.x = solver.primal();
    result.objective = solver.objective() + problem.objective_offset;
    result.duals = solver.row_duals();
    result.reduced_costs = solver.reduced_costs();
  } else if (result.status == LpStatus::kUnbounded) {
    result.objective = -kInf;
  }
  return result;
}

}  // namespace repscen
