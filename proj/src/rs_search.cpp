#include "repscen/rs_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "repscen/mip_solver.hpp"

namespace repscen::rs {

void RsSearchConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("rs_search.max_iterations must be >= 1");
  if (!(acceptance > 1.0)) throw ConfigError("rs_search.acceptance must be > 1");
  if (!(percent > 0.0 && percent < 1.0)) throw ConfigError("rs_search.percent must lie in (0, 1)");
  if (!(difference > 0.0)) throw ConfigError("rs_search.difference must be > 0");
  if (schedule != "zero-then-alternate") throw ConfigError("unknown rs_search.schedule '" + schedule + "'");
}

std::vector<double> heuristic_zero_demand(std::span<const double> xi, std::span<const double> b_star,
                                          std::span<const double> b_surr) {
  if (b_star.size() != xi.size() || b_surr.size() != xi.size())
    throw ModelError("zero-demand heuristic: vector lengths differ");
  std::vector<double> out(xi.begin(), xi.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (std::round(b_star[i]) == 0.0 && std::round(b_surr[i]) == 1.0) out[i] = 0.0;
  return out;
}

std::optional<int> capacity_gap_index(std::span<const double> v_star, std::span<const double> v_surr) {
  if (v_star.size() != v_surr.size()) throw ModelError("capacity vectors differ in length");
  std::optional<int> best;
  double gap = 0.0;
  for (std::size_t i = 0; i < v_star.size(); ++i) {
    const double d = std::abs(v_star[i] - v_surr[i]);
    if (d > gap) {
      gap = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::optional<std::vector<double>> heuristic_percent(std::span<const double> xi, std::span<const double> v_star,
                                                     std::span<const double> v_surr, double p) {
  if (v_star.size() != xi.size()) throw ModelError("percent heuristic: vector lengths differ");
  const auto k = capacity_gap_index(v_star, v_surr);
  if (!k) return std::nullopt;
  std::vector<double> out(xi.begin(), xi.end());
  const double sign = v_star[*k] > v_surr[*k] ? 1.0 : -1.0;
  out[*k] = xi[*k] + sign * p * xi[*k];
  return out;
}

std::optional<std::vector<double>> heuristic_difference(std::span<const double> xi,
                                                        std::span<const double> v_star,
                                                        std::span<const double> v_surr, double f) {
  if (v_star.size() != xi.size()) throw ModelError("difference heuristic: vector lengths differ");
  const auto k = capacity_gap_index(v_star, v_surr);
  if (!k) return std::nullopt;
  std::vector<double> out(xi.begin(), xi.end());
  out[*k] = std::max(0.0, xi[*k] + (v_star[*k] - v_surr[*k]) * f * xi[*k]);
  return out;
}

std::vector<double> surrogate_decision(const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                                       std::span<const double> demand, const SolverConfig& solver) {
  const MipProblem p = build_surrogate(lowered, cflp::scenario_for_demand(inst, demand));
  const MipSolution sol = solve_mip(p, solver);
  if (!sol.has_solution())
    throw ModelError(fmt::format("surrogate for instance seed {} ended without a solution ({})", inst.seed,
                                 to_string(sol.status)));
  std::vector<double> x = first_stage_part(lowered, sol.x);
  for (int j : lowered.int_first) x[j] = std::round(x[j]);
  return x;
}

double surrogate_ovf(const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                     std::span<const double> demand, const OvfOptions& options) {
  return evaluate_ovf(lowered, surrogate_decision(inst, lowered, demand, options.solver), options);
}

RsLabel generate_xi_hat(const cflp::CflpInstance& inst, const TwoStageInstance& lowered,
                        const ExactReference& exact, const RsSearchConfig& cfg, const OvfOptions& options) {
  cfg.validate();
  const cflp::Layout L = cflp::layout_of(inst);
  if (lowered.n1() != L.num_first())
    throw ModelError("representative-scenario search needs a square instance (facilities = clients)");
  if (static_cast<int>(exact.x.size()) != L.num_first()) throw ModelError("exact first stage has wrong length");

  const int n = inst.n;
  std::vector<double> b_star(n), v_star(n);
  for (int i = 0; i < n; ++i) b_star[i] = exact.x[L.b(i)], v_star[i] = exact.x[L.v(i)];

  // Different demand vectors often give the same decision.
  std::map<std::vector<double>, double> phi_cache;

  RsLabel label;
  label.reference_ovf = exact.ovf;
  std::vector<double> xi = cflp::mean_demand(inst);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    label.iterations_used = it;
    const std::vector<double> x = surrogate_decision(inst, lowered, xi, options.solver);
    auto [slot, fresh] = phi_cache.try_emplace(x, 0.0);
    if (fresh) slot->second = evaluate_ovf(lowered, x, options);
    const double phi = slot->second;
    if (phi < label.achieved_ovf) {
      label.achieved_ovf = phi;
      label.xi_star = xi;
    }
    if (phi <= cfg.acceptance * exact.ovf) {
      label.found = true;
      label.achieved_ovf = phi;
      label.xi_star = xi;
      return label;
    }
    std::vector<double> b_surr(n), v_surr(n);
    for (int i = 0; i < n; ++i) b_surr[i] = x[L.b(i)], v_surr[i] = x[L.v(i)];

    std::vector<double> next = heuristic_zero_demand(xi, b_star, b_surr);
    if (next == xi) {
      const bool odd = it % 2 == 1;
      auto step = odd ? heuristic_percent(xi, v_star, v_surr, cfg.percent)
                      : heuristic_difference(xi, v_star, v_surr, cfg.difference);
      if (!step || *step == xi)
        step = odd ? heuristic_difference(xi, v_star, v_surr, cfg.difference)
                   : heuristic_percent(xi, v_star, v_surr, cfg.percent);
      // Neither rule can move the demand: the search is stuck.
      if (!step || *step == xi) break;
      next = std::move(*step);
    }
    xi = std::move(next);
  }
  return label;
}

nlohmann::json to_json(const RsSearchConfig& cfg) {
  return {{"max_iterations", cfg.max_iterations}, {"acceptance", cfg.acceptance}, {"percent", cfg.percent},
          {"difference", cfg.difference},         {"schedule", cfg.schedule},     {"seed", cfg.seed}};
}

RsSearchConfig rs_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("rs_search section must be an object");
  RsSearchConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "max_iterations") cfg.max_iterations = value.get<int>();
      else if (key == "acceptance") cfg.acceptance = value.get<double>();
      else if (key == "percent") cfg.percent = value.get<double>();
      else if (key == "difference") cfg.difference = value.get<double>();
      else if (key == "schedule") cfg.schedule = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw ConfigError("unknown key 'rs_search." + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("rs_search." + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace repscen::rs
