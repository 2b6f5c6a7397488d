#include "repscen/cflp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <fmt/format.h>

namespace repscen::cflp {
namespace {

DenseMatrix uniform_matrix(std::mt19937_64& rng, int n, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi - 1);
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = dist(rng);
  return m;
}

DenseMatrix matrix_from(const nlohmann::json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) throw ModelError(fmt::format("'{}' must have {} rows", what, rows));
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ModelError(fmt::format("'{}' must have {} columns", what, cols));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

nlohmann::json matrix_json(const DenseMatrix& m) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return out;
}

}  // namespace

void CflpInstance::validate() const {
  if (n < 1 || m < 1) throw ModelError("CFLP instance needs n >= 1 and m >= 1");
  const auto un = static_cast<std::size_t>(n);
  if (c_f.size() != un || c_v.size() != un) throw ModelError("c_f and c_v must have length n");
  if (c_tf.rows() != un || c_tf.cols() != un || c_tv.rows() != un || c_tv.cols() != un)
    throw ModelError("transport cost matrices must be n x n");
  if (demand.rows() != static_cast<std::size_t>(m) || demand.cols() != un) throw ModelError("demand must be m x n");
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!std::all_of(c_f.begin(), c_f.end(), nonneg) || !std::all_of(c_v.begin(), c_v.end(), nonneg) ||
      !std::all_of(c_tf.data().begin(), c_tf.data().end(), nonneg) ||
      !std::all_of(c_tv.data().begin(), c_tv.data().end(), nonneg))
    throw ModelError("costs must be finite and nonnegative");
  for (double d : demand.data())
    if (!nonneg(d) || d != std::floor(d)) throw ModelError("demand entries must be nonnegative integers");
  if (!nonneg(shortfall_penalty)) throw ModelError("shortfall_penalty must be nonnegative");
}

void GeneratorConfig::validate() const {
  if (n < 1 || m < 1) throw ConfigError("generator n and m must be >= 1");
  if (count < 0) throw ConfigError("generator count must be >= 0");
  if (cf_lo >= cf_hi || cv_lo >= cv_hi || ctf_lo >= ctf_hi || ctv_lo >= ctv_hi)
    throw ConfigError("generator ranges must be nonempty [lo, hi)");
  if (cf_lo < 0 || cv_lo < 0 || ctf_lo < 0 || ctv_lo < 0) throw ConfigError("generator costs must be nonnegative");
  if (!(shortfall_penalty >= 0.0)) throw ConfigError("shortfall_penalty must be >= 0");
}

TransportCosts generate_transport_costs(const GeneratorConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.transport_seed);
  TransportCosts t;
  t.fixed = uniform_matrix(rng, cfg.n, cfg.ctf_lo, cfg.ctf_hi);
  t.variable = uniform_matrix(rng, cfg.n, cfg.ctv_lo, cfg.ctv_hi);
  return t;
}

int poisson_mean(int c_f, int c_v, int n) {
  const long long num = static_cast<long long>(c_f) + 10LL * c_v;
  if (num <= 0) return 0;
  // Largest k with k * sqrt(n) <= num, i.e. k^2 n <= num^2.
  long long k = static_cast<long long>(std::floor(num / std::sqrt(static_cast<double>(n))));
  while ((k + 1) * (k + 1) * n <= num * num) ++k;
  while (k > 0 && k * k * n > num * num) --k;
  return static_cast<int>(k);
}

CflpInstance generate_instance(const GeneratorConfig& cfg, std::uint64_t seed) {
  return generate_instance(cfg, generate_transport_costs(cfg), seed);
}

CflpInstance generate_instance(const GeneratorConfig& cfg, const TransportCosts& transport, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  CflpInstance inst;
  inst.n = cfg.n;
  inst.m = cfg.m;
  inst.seed = seed;
  inst.shortfall_penalty = cfg.shortfall_penalty;
  inst.c_tf = transport.fixed;
  inst.c_tv = transport.variable;
  std::uniform_int_distribution<int> cf(cfg.cf_lo, cfg.cf_hi - 1);
  std::uniform_int_distribution<int> cv(cfg.cv_lo, cfg.cv_hi - 1);
  std::vector<int> fixed(cfg.n), unit(cfg.n);
  for (int i = 0; i < cfg.n; ++i) fixed[i] = cf(rng);
  for (int i = 0; i < cfg.n; ++i) unit[i] = cv(rng);
  inst.c_f.assign(fixed.begin(), fixed.end());
  inst.c_v.assign(unit.begin(), unit.end());
  // A zero mean is outside the domain of std::poisson_distribution.
  std::vector<std::optional<std::poisson_distribution<int>>> demand_dist(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const int lambda = poisson_mean(fixed[i], unit[i], cfg.n);
    if (lambda > 0) demand_dist[i].emplace(lambda);
  }
  inst.demand = DenseMatrix(cfg.m, cfg.n);
  for (int s = 0; s < cfg.m; ++s)
    for (int i = 0; i < cfg.n; ++i) inst.demand(s, i) = demand_dist[i] ? (*demand_dist[i])(rng) : 0;
  return inst;
}

CardinalityBounds cardinality_bounds(int n) {
  return {(n + 9) / 10, (3 * n) / 4};
}

double capacity_big_m(const CflpInstance& inst) {
  double best = 0.0;
  for (int s = 0; s < inst.m; ++s) {
    double total = 0.0;
    for (int j = 0; j < inst.n; ++j) total += inst.demand(s, j);
    best = std::max(best, total);
  }
  return best;
}

Layout layout_of(const CflpInstance& inst) { return Layout{inst.n, inst.shortfall_penalty > 0.0}; }

Scenario scenario_for_demand(const CflpInstance& inst, std::span<const double> demand) {
  if (static_cast<int>(demand.size()) != inst.n) throw ModelError("demand vector must have length n");
  const Layout L = layout_of(inst);
  const int n = inst.n;
  Scenario xi;
  xi.probability = 1.0;
  xi.q.assign(L.num_second(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      xi.q[L.y(i, j)] = inst.c_tv(i, j);
      xi.q[L.u(i, j)] = inst.c_tf(i, j);
    }
  if (L.shortfall)
    for (int j = 0; j < n; ++j) xi.q[L.z(j)] = inst.shortfall_penalty;
  xi.h.assign(L.num_second_rows(), 0.0);
  for (int j = 0; j < n; ++j) {
    if (!(demand[j] >= 0.0)) throw ModelError("demand must be nonnegative");
    xi.h[L.demand_row(j)] = demand[j];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) xi.h[L.link_bound_row(i, j)] = 1.0;
  xi.T = DenseMatrix(L.num_second_rows(), L.num_first());
  for (int i = 0; i < n; ++i) xi.T(L.supply_row(i), L.v(i)) = -1.0;
  xi.W = recourse_for_demand(inst, demand);
  return xi;
}

DenseMatrix recourse_for_demand(const CflpInstance& inst, std::span<const double> demand) {
  const Layout L = layout_of(inst);
  const int n = inst.n;
  DenseMatrix W(L.num_second_rows(), L.num_second());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      W(L.supply_row(i), L.y(i, j)) = 1.0;
      W(L.demand_row(j), L.y(i, j)) = 1.0;
      W(L.link_row(i, j), L.y(i, j)) = 1.0;
      W(L.link_row(i, j), L.u(i, j)) = -demand[j];
      W(L.link_bound_row(i, j), L.u(i, j)) = 1.0;
    }
  if (L.shortfall)
    for (int j = 0; j < n; ++j) W(L.demand_row(j), L.z(j)) = 1.0;
  return W;
}

TwoStageInstance to_two_stage(const CflpInstance& inst) {
  inst.validate();
  const Layout L = layout_of(inst);
  const int n = inst.n;
  TwoStageInstance out;

  out.c.assign(L.num_first(), 0.0);
  for (int i = 0; i < n; ++i) {
    out.c[L.b(i)] = inst.c_f[i];
    out.c[L.v(i)] = inst.c_v[i];
    out.int_first.push_back(L.b(i));
  }
  const auto card = cardinality_bounds(n);
  const double big_m = capacity_big_m(inst);
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  auto new_row = [&](double b) {
    rows.emplace_back(L.num_first(), 0.0);
    rhs.push_back(b);
    return rows.size() - 1;
  };
  {
    auto r = new_row(card.upper);
    for (int i = 0; i < n; ++i) rows[r][L.b(i)] = 1.0;
    r = new_row(-card.lower);
    for (int i = 0; i < n; ++i) rows[r][L.b(i)] = -1.0;
  }
  for (int i = 0; i < n; ++i) {
    auto r = new_row(0.0);
    rows[r][L.v(i)] = 1.0;
    rows[r][L.b(i)] = -big_m;
  }
  for (int i = 0; i < n; ++i) {
    rows[new_row(1.0)][L.b(i)] = 1.0;
    rows[new_row(0.0)][L.b(i)] = -1.0;
    rows[new_row(0.0)][L.v(i)] = -1.0;
  }
  out.A = DenseMatrix(rows.size(), L.num_first());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int j = 0; j < L.num_first(); ++j) out.A(r, j) = rows[r][j];
  out.b = rhs;

  // The shared W carries the mean demand as link big-M; every scenario
  // overrides it with its own demand.
  out.W = recourse_for_demand(inst, mean_demand(inst));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.int_second.push_back(L.u(i, j));
  for (int j = 0; j < n; ++j) out.eq_second.push_back(L.demand_row(j));
  std::sort(out.int_second.begin(), out.int_second.end());

  for (int s = 0; s < inst.m; ++s) {
    auto row = inst.demand.row(s);
    Scenario xi = scenario_for_demand(inst, row);
    xi.probability = 1.0 / inst.m;
    out.scenarios.push_back(std::move(xi));
  }
  // Uniform weights must sum to one exactly enough for validation.
  out.validate();
  return out;
}

std::vector<double> mean_demand(const CflpInstance& inst) {
  std::vector<double> mean(inst.n, 0.0);
  for (int s = 0; s < inst.m; ++s)
    for (int j = 0; j < inst.n; ++j) mean[j] += inst.demand(s, j);
  for (double& v : mean) v /= inst.m;
  return mean;
}

std::vector<double> open_decisions(const CflpInstance& inst, std::span<const double> x) {
  const Layout L = layout_of(inst);
  std::vector<double> b(inst.n);
  for (int i = 0; i < inst.n; ++i) b[i] = std::round(x[L.b(i)]);
  return b;
}

std::vector<double> capacities(const CflpInstance& inst, std::span<const double> x) {
  const Layout L = layout_of(inst);
  std::vector<double> v(inst.n);
  for (int i = 0; i < inst.n; ++i) v[i] = x[L.v(i)];
  return v;
}

nlohmann::json to_json(const CflpInstance& inst) {
  return {{"n", inst.n},
          {"m", inst.m},
          {"c_f", inst.c_f},
          {"c_v", inst.c_v},
          {"c_tf", matrix_json(inst.c_tf)},
          {"c_tv", matrix_json(inst.c_tv)},
          {"demand", matrix_json(inst.demand)},
          {"seed", inst.seed},
          {"shortfall_penalty", inst.shortfall_penalty}};
}

CflpInstance cflp_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"n", "m", "c_f", "c_v", "c_tf", "c_tv", "demand", "seed",
                                                 "shortfall_penalty"};
  if (!j.is_object()) throw ModelError("CFLP instance must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ModelError("unknown key '" + key + "' in CFLP instance");
  CflpInstance inst;
  try {
    inst.n = j.at("n").get<int>();
    inst.m = j.at("m").get<int>();
    if (inst.n < 1 || inst.m < 1) throw ModelError("CFLP instance needs n >= 1 and m >= 1");
    inst.c_f = j.at("c_f").get<std::vector<double>>();
    inst.c_v = j.at("c_v").get<std::vector<double>>();
    inst.c_tf = matrix_from(j.at("c_tf"), inst.n, inst.n, "c_tf");
    inst.c_tv = matrix_from(j.at("c_tv"), inst.n, inst.n, "c_tv");
    inst.demand = matrix_from(j.at("demand"), inst.m, inst.n, "demand");
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.shortfall_penalty = j.value("shortfall_penalty", 50.0);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed CFLP instance: ") + e.what());
  }
  inst.validate();
  return inst;
}

}  // namespace repscen::cflp
