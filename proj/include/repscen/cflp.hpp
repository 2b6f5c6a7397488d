#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "repscen/common.hpp"
#include "repscen/core_model.hpp"

namespace repscen::cflp {

/// Stochastic capacitated facility location instance with n locations that
/// are both candidate facilities and clients, and m equiprobable demand
/// scenarios.
struct CflpInstance {
  int n = 0;
  int m = 0;
  std::vector<double> c_f;  // fixed opening cost
  std::vector<double> c_v;  // cost per unit of capacity
  DenseMatrix c_tf;         // fixed transport cost per used link, n x n
  DenseMatrix c_tv;         // transport cost per unit, n x n
  DenseMatrix demand;       // m x n, nonnegative integers
  std::uint64_t seed = 0;
  /// Cost per unit of unmet demand; 0 drops the shortfall variables and
  /// leaves the recourse problem without complete recourse.
  double shortfall_penalty = 50.0;

  void validate() const;
  bool operator==(const CflpInstance&) const = default;
};

struct GeneratorConfig {
  int n = 5;
  int m = 20;
  int count = 2000;
  // Half-open integer ranges [lo, hi).
  int cf_lo = 15, cf_hi = 20;
  int cv_lo = 5, cv_hi = 10;
  int ctf_lo = 5, ctf_hi = 10;
  int ctv_lo = 1, ctv_hi = 5;
  std::uint64_t transport_seed = 20200521;
  double shortfall_penalty = 50.0;

  void validate() const;
};

struct TransportCosts {
  DenseMatrix fixed;
  DenseMatrix variable;
};

/// Transport costs shared by every instance of a run, drawn from
/// transport_seed only.
TransportCosts generate_transport_costs(const GeneratorConfig& cfg);

/// Poisson mean floor((c_f + 10 c_v) / sqrt(n)), computed in exact integer
/// arithmetic.
int poisson_mean(int c_f, int c_v, int n);

CflpInstance generate_instance(const GeneratorConfig& cfg, std::uint64_t seed);
CflpInstance generate_instance(const GeneratorConfig& cfg, const TransportCosts& transport, std::uint64_t seed);

struct CardinalityBounds {
  int lower;
  int upper;
};

/// ceil(n/10) <= sum b <= floor(3n/4).
CardinalityBounds cardinality_bounds(int n);

/// Capacity big-M of the first stage: the largest total scenario demand.
double capacity_big_m(const CflpInstance& inst);

/// Column/row layout of the lowered instance.
struct Layout {
  int n;
  bool shortfall;

  int b(int i) const { return i; }
  int v(int i) const { return n + i; }
  int y(int i, int j) const { return i * n + j; }
  int u(int i, int j) const { return n * n + i * n + j; }
  int z(int j) const { return 2 * n * n + j; }
  int num_first() const { return 2 * n; }
  int num_second() const { return 2 * n * n + (shortfall ? n : 0); }

  int supply_row(int i) const { return i; }
  int demand_row(int j) const { return n + j; }
  int link_row(int i, int j) const { return 2 * n + i * n + j; }
  int link_bound_row(int i, int j) const { return 2 * n + n * n + i * n + j; }
  int num_second_rows() const { return 2 * n + 2 * n * n; }
};

Layout layout_of(const CflpInstance& inst);

/// Lowers the instance into the general two-stage form. First stage x = (b, v);
/// second stage y per scenario = (y, u, z). Probabilities are uniform 1/m.
TwoStageInstance to_two_stage(const CflpInstance& inst);

/// Recourse matrix for client demands `demand`; the link rows use
/// y_ij <= d_j u_ij.
DenseMatrix recourse_for_demand(const CflpInstance& inst, std::span<const double> demand);

/// Scenario of the lowered instance whose client demands are `demand`
/// (real-valued, nonnegative); probability 1.
Scenario scenario_for_demand(const CflpInstance& inst, std::span<const double> demand);

/// Column means of the demand matrix.
std::vector<double> mean_demand(const CflpInstance& inst);

std::vector<double> open_decisions(const CflpInstance& inst, std::span<const double> x);
std::vector<double> capacities(const CflpInstance& inst, std::span<const double> x);

nlohmann::json to_json(const CflpInstance& inst);
CflpInstance cflp_from_json(const nlohmann::json& j);

}  // namespace repscen::cflp
