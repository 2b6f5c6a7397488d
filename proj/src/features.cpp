#include "repscen/features.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace repscen::features {

std::vector<std::string> feature_names(int n) {
  std::vector<std::string> names;
  names.reserve(19 * n);
  for (int i = 0; i < n; ++i) names.push_back(fmt::format("c_f_{}", i));
  for (int i = 0; i < n; ++i) names.push_back(fmt::format("c_v_{}", i));
  for (int i = 0; i < n; ++i)
    for (const char* s : kStatNames) names.push_back(fmt::format("{}_{}", s, i));
  for (double c : kDominanceFactors)
    for (int i = 0; i < n; ++i) names.push_back(fmt::format("ge_{}_{}", c, i));
  for (double c : kDominanceFactors)
    for (int i = 0; i < n; ++i) names.push_back(fmt::format("le_{}_{}", c, i));
  return names;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ModelError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

FeatureVector extract_features(const cflp::CflpInstance& inst) {
  inst.validate();
  const int n = inst.n;
  const int m = inst.m;
  FeatureVector fv;
  fv.layout = Layout{n};
  fv.values.assign(fv.layout.size(), 0.0);
  auto& v = fv.values;
  const Layout& L = fv.layout;

  for (int i = 0; i < n; ++i) {
    v[L.c_f(i)] = inst.c_f[i];
    v[L.c_v(i)] = inst.c_v[i];
  }

  std::vector<double> col(m);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < m; ++s) col[s] = inst.demand(s, i);
    std::sort(col.begin(), col.end());
    double mean = 0.0;
    for (double d : col) mean += d;
    mean /= m;
    double var = 0.0;
    for (double d : col) var += (d - mean) * (d - mean);
    var /= m;
    const double stats[7] = {col.front(), col.back(), mean, std::sqrt(var), quantile_sorted(col, 0.5),
                             quantile_sorted(col, 0.75), quantile_sorted(col, 0.25)};
    for (int k = 0; k < 7; ++k) v[L.stat(i, k)] = stats[k];
  }

  for (std::size_t k = 0; k < kDominanceFactors.size(); ++k) {
    const double c = kDominanceFactors[k];
    for (int i = 0; i < n; ++i) {
      int ge = 0, le = 0;
      for (int s = 0; s < m; ++s) {
        const double own = c * inst.demand(s, i);
        bool all_ge = true, all_le = true;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          all_ge = all_ge && own >= inst.demand(s, j);
          all_le = all_le && own <= inst.demand(s, j);
        }
        ge += all_ge;
        le += all_le;
      }
      v[L.ge(static_cast<int>(k), i)] = static_cast<double>(ge) / m;
      v[L.le(static_cast<int>(k), i)] = static_cast<double>(le) / m;
    }
  }
  return fv;
}

}  // namespace repscen::features
