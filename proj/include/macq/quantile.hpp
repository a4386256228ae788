/*
 * Copyright 2026 The MACQ Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "macq/error.hpp"
#include "macq/model.hpp"

namespace macq {

// Number of observations k (1-based) such that k/n >= alpha for the first
// time, i.e. the rank of the generalised-inverse quantile.
inline std::size_t quantile_rank(std::size_t n, double alpha) {
  auto reaches = [&](std::size_t k) {
    return static_cast<double>(k) / static_cast<double>(n) >= alpha;
  };
  auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && reaches(k - 1)) --k;
  while (k < n && !reaches(k)) ++k;
  return k;
}

inline void check_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ArgumentError("quantile level must lie in (0,1), got " + std::to_string(alpha));
  }
}

// inf{ v : F_n(v) >= alpha }
inline double empirical_quantile(std::span<const double> values, double alpha) {
  if (values.empty()) throw ArgumentError("empirical quantile of an empty sample");
  check_level(alpha);
  std::vector<double> sorted(values.begin(), values.end());
  const std::size_t k = quantile_rank(sorted.size(), alpha);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   sorted.end());
  return sorted[k - 1];
}

// Instance indices sorted by value. Ties are broken by `tie_keys` when given
// (e.g. the original row index of shuffled data), otherwise by row order.
inline std::vector<Eigen::Index> rank_order(std::span<const double> values,
                                            std::span<const Eigen::Index> tie_keys = {}) {
  if (!tie_keys.empty() && tie_keys.size() != values.size()) {
    throw ShapeError("tie-break keys must match the sample size");
  }
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto key = [&](Eigen::Index i) {
    return tie_keys.empty() ? i : tie_keys[static_cast<std::size_t>(i)];
  };
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double va = values[static_cast<std::size_t>(a)];
    const double vb = values[static_cast<std::size_t>(b)];
    if (va != vb) return va < vb;
    return key(a) < key(b);
  });
  return order;
}

// alpha_l = l/100 for l in [first, last]; the default grid is 1..99.
inline std::vector<double> percent_levels(int first = 1, int last = 99) {
  if (first < 1 || last > 99 || first > last) {
    throw ArgumentError("percent grid must satisfy 1 <= first <= last <= 99");
  }
  std::vector<double> levels;
  for (int l = first; l <= last; ++l) levels.push_back(static_cast<double>(l) / 100.0);
  return levels;
}

// Quantile levels with the empirical quantiles of a canonical-value sample and
// the rank transform of every instance.
struct QuantileGrid {
  std::vector<double> levels;
  Vector quantiles;                  // F_n^{-1}(alpha_l)
  std::vector<Eigen::Index> order;   // sorted position -> instance
  Vector ranks;                      // instance -> rank / n
  Vector sorted_values;
  // Rank-space location u* at which each level is evaluated: alpha itself, or
  // the centre of the block of tied observations that carries the quantile.
  Vector evaluation_points;

  std::size_t size() const { return levels.size(); }
  Eigen::Index sample_size() const { return sorted_values.size(); }

  static QuantileGrid build(std::span<const double> values, std::vector<double> levels,
                            std::span<const Eigen::Index> tie_keys = {}) {
    if (values.empty()) throw ArgumentError("quantile grid needs a non-empty sample");
    if (levels.empty()) throw ArgumentError("quantile grid needs at least one level");
    for (std::size_t l = 0; l < levels.size(); ++l) {
      check_level(levels[l]);
      if (l > 0 && !(levels[l] > levels[l - 1])) {
        throw ArgumentError("quantile levels must be strictly increasing");
      }
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw NumericError("non-finite value in quantile sample");
    }
    QuantileGrid g;
    const std::size_t n = values.size();
    g.levels = std::move(levels);
    g.order = rank_order(values, tie_keys);
    g.sorted_values.resize(static_cast<Eigen::Index>(n));
    g.ranks.resize(static_cast<Eigen::Index>(n));
    for (std::size_t p = 0; p < n; ++p) {
      const auto i = g.order[p];
      g.sorted_values(static_cast<Eigen::Index>(p)) = values[static_cast<std::size_t>(i)];
      g.ranks(i) = static_cast<double>(p + 1) / static_cast<double>(n);
    }
    const auto L = static_cast<Eigen::Index>(g.levels.size());
    g.quantiles.resize(L);
    g.evaluation_points.resize(L);
    for (Eigen::Index l = 0; l < L; ++l) {
      const double alpha = g.levels[static_cast<std::size_t>(l)];
      const std::size_t k = quantile_rank(n, alpha);
      const double v = g.sorted_values(static_cast<Eigen::Index>(k - 1));
      g.quantiles(l) = v;
      std::size_t lo = k - 1, hi = k - 1;
      while (lo > 0 && g.sorted_values(static_cast<Eigen::Index>(lo - 1)) == v) --lo;
      while (hi + 1 < n && g.sorted_values(static_cast<Eigen::Index>(hi + 1)) == v) ++hi;
      g.evaluation_points(l) =
          (lo == hi) ? alpha
                     : static_cast<double>(lo + hi + 2) / (2.0 * static_cast<double>(n));
    }
    return g;
  }

  static QuantileGrid build(const Vector& values, std::vector<double> levels) {
    return build(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())),
                 std::move(levels));
  }
};

}  // namespace macq
