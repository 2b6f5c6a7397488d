#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "repscen/cflp.hpp"

namespace repscen::features {

inline constexpr std::array<double, 5> kDominanceFactors = {0.9, 1.0, 1.1, 1.2, 1.5};

/// Per-client statistics in storage order. std is the population form;
/// quantiles interpolate linearly between order statistics.
inline constexpr std::array<const char*, 7> kStatNames = {"min", "max", "mean", "std", "median", "q75", "q25"};

/// Block offsets of a feature vector for n clients:
///   c_f[n] | c_v[n] | stats[7n] (client-major) | dominance_ge[5n] | dominance_le[5n]
/// The dominance blocks are factor-major: entry (k, i) sits at k*n + i.
struct Layout {
  int n;

  int size() const { return 19 * n; }
  int c_f(int i) const { return i; }
  int c_v(int i) const { return n + i; }
  int stat(int i, int k) const { return 2 * n + 7 * i + k; }
  int ge(int k, int i) const { return 9 * n + k * n + i; }
  int le(int k, int i) const { return 14 * n + k * n + i; }
};

struct FeatureVector {
  std::vector<double> values;
  Layout layout{0};
};

inline int feature_length(int n) { return 19 * n; }

/// Column names used as the dataset CSV header.
std::vector<std::string> feature_names(int n);

/// Quantile q in [0, 1] of sorted data with linear interpolation at
/// position q (size - 1).
double quantile_sorted(std::span<const double> sorted, double q);

FeatureVector extract_features(const cflp::CflpInstance& inst);

}  // namespace repscen::features
