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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "macq/derivatives.hpp"
#include "macq/error.hpp"
#include "macq/model.hpp"
#include "macq/quantile.hpp"
#include "macq/rng.hpp"

namespace macq {

// One-dimensional effect profile of feature j.
struct ProfileCurve {
  int feature = 0;
  std::string method;        // "ice", "pdp" or "ale"
  long instance = -1;        // ICE only
  std::vector<double> points;  // strictly increasing, model input units
  std::vector<double> values;
  double anchor = 0.0;       // ALE: x_{j0}, where the profile is 0
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_feature(int j, Eigen::Index q) {
  if (j < 0 || j >= q) throw ArgumentError("unknown feature index " + std::to_string(j));
}

inline void check_points(const std::vector<double>& points) {
  if (points.empty()) throw ArgumentError("profile needs at least one evaluation point");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) throw DomainError("profile points must be finite");
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw ArgumentError("profile points must be strictly increasing");
    }
  }
}

}  // namespace detail

// theta(x with x_j replaced by each grid point)
inline ProfileCurve ice_profile(const SmoothModel& model, const Vector& x, int j,
                                const std::vector<double>& points, long instance = -1) {
  detail::check_feature(j, model.input_dim());
  detail::check_points(points);
  ProfileCurve c;
  c.feature = j;
  c.method = "ice";
  c.instance = instance;
  c.points = points;
  Vector probe = x;
  for (double z : points) {
    probe(j) = z;
    c.values.push_back(model.canonical(probe));
  }
  return c;
}

// Empirical average of theta(z, X_{\j}) over all instances.
inline ProfileCurve pdp_profile(const SmoothModel& model, const RowMatrix& x, int j,
                                const std::vector<double>& points) {
  detail::check_feature(j, x.cols());
  detail::check_points(points);
  if (x.rows() == 0) throw ArgumentError("partial dependence needs data");
  ProfileCurve c;
  c.feature = j;
  c.method = "pdp";
  c.points = points;
  c.values.assign(points.size(), 0.0);
  Vector probe(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    probe = x.row(i).transpose();
    for (std::size_t p = 0; p < points.size(); ++p) {
      probe(j) = points[p];
      c.values[p] += model.canonical(probe);
    }
  }
  for (double& v : c.values) v /= static_cast<double>(x.rows());
  return c;
}

enum class AleMode { kGradient, kFiniteDifference };

struct AleConfig {
  int bins = 40;
  AleMode mode = AleMode::kGradient;
  std::optional<double> anchor;  // defaults to the first bin edge
};

// Accumulated local effects on bins at empirical quantiles of feature j.
// Gradient mode averages theta_j over the bin members; finite-difference mode
// averages theta(upper edge) - theta(lower edge) with the other features held.
inline ProfileCurve ale_profile(const SmoothModel& model, const RowMatrix& x, int j,
                                const AleConfig& cfg = {}) {
  detail::check_feature(j, x.cols());
  if (cfg.bins < 2) throw ArgumentError("ALE needs at least 2 bins");
  if (x.rows() < 2) throw ArgumentError("ALE needs at least 2 instances");
  ProfileCurve c;
  c.feature = j;
  c.method = "ale";

  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, j);
  std::vector<double> sorted = column;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  std::vector<double> edges{sorted.front()};
  for (int b = 1; b <= cfg.bins; ++b) {
    const double level = static_cast<double>(b) / cfg.bins;
    const double e = b == cfg.bins ? sorted.back() : sorted[quantile_rank(n, level) - 1];
    if (e > edges.back()) {
      edges.push_back(e);
    } else {
      c.warnings.push_back("bin " + std::to_string(b) + " collapsed onto edge " +
                           std::to_string(e) + "; merged with its neighbour");
    }
  }
  if (edges.size() < 2) throw ArgumentError("feature " + std::to_string(j) + " is constant");

  // bin b covers (edges[b-1], edges[b]]; the first bin also holds edges[0]
  const std::size_t nb = edges.size() - 1;
  std::vector<double> sum(nb, 0.0);
  std::vector<std::size_t> count(nb, 0);
  const DerivativeBatch batch = cfg.mode == AleMode::kGradient ? evaluate_batch(model, x, 1)
                                                                : DerivativeBatch{};
  Vector probe(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double v = x(i, j);
    auto it = std::lower_bound(edges.begin() + 1, edges.end(), v);
    const auto b = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        std::distance(edges.begin() + 1, it), static_cast<std::ptrdiff_t>(nb) - 1));
    if (cfg.mode == AleMode::kGradient) {
      sum[b] += batch.gradients(i, j);
    } else {
      probe = x.row(i).transpose();
      probe(j) = edges[b + 1];
      const double hi = model.canonical(probe);
      probe(j) = edges[b];
      sum[b] += hi - model.canonical(probe);
    }
    ++count[b];
  }

  std::vector<double> points{edges.front()};
  std::vector<double> acc{0.0};
  for (std::size_t b = 0; b < nb; ++b) {
    if (count[b] == 0) {  // the next occupied bin absorbs this one's width
      c.warnings.push_back("empty ALE bin (" + std::to_string(edges[b]) + ", " +
                           std::to_string(edges[b + 1]) + "] merged with its neighbour");
      continue;
    }
    const double lo = points.back();
    const double hi = edges[b + 1];
    const double mean = sum[b] / static_cast<double>(count[b]);
    const double increment =
        cfg.mode == AleMode::kGradient ? mean * (hi - lo) : mean;
    acc.push_back(acc.back() + increment);
    points.push_back(hi);
  }

  const double anchor = cfg.anchor.value_or(points.front());
  if (!std::isfinite(anchor)) throw DomainError("ALE anchor must be finite");
  // piecewise-linear value of the accumulated curve at the anchor, with the
  // end segments extended beyond the observed range
  std::size_t seg = 0;
  while (seg + 2 < points.size() && anchor > points[seg + 1]) ++seg;
  const double t = (anchor - points[seg]) / (points[seg + 1] - points[seg]);
  const double at_anchor = acc[seg] + t * (acc[seg + 1] - acc[seg]);

  c.points = std::move(points);
  c.values.resize(acc.size());
  for (std::size_t p = 0; p < acc.size(); ++p) c.values[p] = acc[p] - at_anchor;
  c.anchor = anchor;
  return c;
}

struct PermutationImportance {
  double base_deviance = 0.0;
  std::vector<double> increase;  // per feature, mean over repetitions
  int repetitions = 1;
  std::uint64_t seed = 0;
};

// -(2/n) sum_i [y log mu + (1 - y) log(1 - mu)], mu clamped to [1e-12, 1 - 1e-12].
// Fractional responses give the quasi-Bernoulli deviance.
inline double bernoulli_deviance(const Vector& y, const Vector& mu) {
  if (y.size() != mu.size()) throw ShapeError("response and prediction lengths differ");
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double m = std::clamp(mu(i), 1e-12, 1.0 - 1e-12);
    d += y(i) * std::log(m) + (1.0 - y(i)) * std::log(1.0 - m);
  }
  if (y.size() == 0) throw ArgumentError("deviance needs at least one observation");
  d *= -2.0 / static_cast<double>(y.size());
  if (!std::isfinite(d)) throw NumericError("deviance is not finite");
  return d;
}

inline Vector mean_predictions(const SmoothModel& model, const RowMatrix& x) {
  Vector mu = evaluate_values(model, x);
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = sigmoid(mu(i));
  return mu;
}

// Increase in deviance after permuting one column at a time. Every feature
// draws from its own stream derived from `seed`.
inline PermutationImportance permutation_importance(const SmoothModel& model,
                                                    const RowMatrix& x, const Vector& y,
                                                    int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw ArgumentError("permutation importance needs repetitions >= 1");
  if (y.size() != x.rows()) throw ShapeError("response length does not match data");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y(i) >= 0.0 && y(i) <= 1.0)) throw DomainError("responses must lie in [0,1]");
  }
  PermutationImportance out;
  out.repetitions = repetitions;
  out.seed = seed;
  out.base_deviance = bernoulli_deviance(y, mean_predictions(model, x));
  out.increase.assign(static_cast<std::size_t>(x.cols()), 0.0);
  RowMatrix shuffled = x;
  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Rng rng(stream_seed(seed, "permutation", static_cast<std::uint64_t>(j)));
    double total = 0.0;
    for (int r = 0; r < repetitions; ++r) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, j);
      rng.shuffle(column);
      for (Eigen::Index i = 0; i < x.rows(); ++i) shuffled(i, j) = column[static_cast<std::size_t>(i)];
      total += bernoulli_deviance(y, mean_predictions(model, shuffled)) - out.base_deviance;
    }
    shuffled.col(j) = x.col(j);
    out.increase[static_cast<std::size_t>(j)] = total / repetitions;
  }
  return out;
}

}  // namespace macq
