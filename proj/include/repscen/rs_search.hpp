#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "repscen/cflp.hpp"
#include "repscen/core_model.hpp"

namespace repscen::rs {

struct RsSearchConfig {
  int max_iterations = 200;
  double acceptance = 1.01;
  double percent = 0.1;
  double difference = 0.005;
  /// Only "zero-then-alternate" is implemented: zero-demand first, and when
  /// it changes nothing, percent on odd and difference on even iterations.
  std::string schedule = "zero-then-alternate";
  std::uint64_t seed = 0;

  void validate() const;
};

struct RsLabel {
  std::vector<double> xi_star;
  double achieved_ovf = kInf;
  double reference_ovf = kInf;
  int iterations_used = 0;
  bool found = false;
};

/// Exact-solve data the search compares against.
struct ExactReference {
  std::vector<double> x;  // first stage (b, v)
  double ovf = kInf;      // Phi(x)
};

/// Zeroes xi_i wherever b_star_i = 0 and b_surr_i = 1.
std::vector<double> heuristic_zero_demand(std::span<const double> xi, std::span<const double> b_star,
                                          std::span<const double> b_surr);

/// argmax_i |v_star_i - v_surr_i|, lowest index on ties; nullopt when all
/// capacities agree.
std::optional<int> capacity_gap_index(std::span<const double> v_star, std::span<const double> v_surr);

/// Multiplicative step of size p toward the exact capacity; nullopt is the
/// no-op signal for equal capacities.
std::optional<std::vector<double>> heuristic_percent(std::span<const double> xi, std::span<const double> v_star,
                                                     std::span<const double> v_surr, double p);

/// Step proportional to the capacity difference, clamped at 0; nullopt for
/// equal capacities.
std::optional<std::vector<double>> heuristic_difference(std::span<const double> xi,
                                                        std::span<const double> v_star,
                                                        std::span<const double> v_surr, double f);

/// First-stage decision of the surrogate for client demands `demand`, solved
/// to optimality.
std::vector<double> surrogate_decision(const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                                       std::span<const double> demand, const SolverConfig& solver);

/// Phi of the surrogate decision for `demand`.
double surrogate_ovf(const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                     std::span<const double> demand, const OvfOptions& options = {});

/// Label search: start from the mean demand, accept as soon as
/// Phi(x of surrogate) <= acceptance * exact.ovf, otherwise perturb. When no
/// label is found the best demand vector seen is returned with found=false.
/// Requires a square instance (facilities = clients).
RsLabel generate_xi_hat(const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                        const ExactReference& exact, const RsSearchConfig& cfg, const OvfOptions& options = {});

nlohmann::json to_json(const RsSearchConfig& cfg);
RsSearchConfig rs_config_from_json(const nlohmann::json& j);

}  // namespace repscen::rs
