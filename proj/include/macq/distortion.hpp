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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "macq/derivatives.hpp"
#include "macq/engine.hpp"
#include "macq/error.hpp"
#include "macq/quantile.hpp"

namespace macq {

// A density zeta on [0,1] weighting the output ranks. The uniform density
// recovers the mean, a Dirac mass at alpha recovers the alpha-quantile.
class DistortionDensity {
 public:
  enum class Kind { kUniform, kDirac, kTable, kFunction };

  static DistortionDensity uniform() { return DistortionDensity(Kind::kUniform); }

  static DistortionDensity dirac(double alpha) {
    check_level(alpha);
    DistortionDensity d(Kind::kDirac);
    d.alpha_ = alpha;
    return d;
  }

  // Piecewise constant on the uniform partition of [0,1] into table.size()
  // cells. Normalisation is validated, never rescaled.
  static DistortionDensity table(std::vector<double> heights) {
    if (heights.empty()) throw ArgumentError("density table is empty");
    double mass = 0.0;
    for (double h : heights) {
      if (!std::isfinite(h) || h < 0.0) throw ArgumentError("density table entries must be >= 0");
      mass += h;
    }
    mass /= static_cast<double>(heights.size());
    if (std::abs(mass - 1.0) > 1e-8) {
      throw ArgumentError("density table integrates to " + std::to_string(mass) + ", not 1");
    }
    DistortionDensity d(Kind::kTable);
    d.table_ = std::move(heights);
    return d;
  }

  // Arbitrary density given as a callable; normalisation is checked with
  // composite Simpson quadrature.
  static DistortionDensity function(std::function<double(double)> zeta,
                                    std::string label = "custom") {
    if (!zeta) throw ArgumentError("density function is empty");
    constexpr int kCells = 4096;
    double mass = 0.0;
    for (int i = 0; i <= kCells; ++i) {
      const double u = static_cast<double>(i) / kCells;
      const double v = zeta(u);
      if (!std::isfinite(v) || v < 0.0) {
        throw ArgumentError("density must be finite and non-negative on [0,1]");
      }
      const double w = (i == 0 || i == kCells) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      mass += w * v;
    }
    mass /= 3.0 * kCells;
    if (std::abs(mass - 1.0) > 1e-8) {
      throw ArgumentError("density integrates to " + std::to_string(mass) + ", not 1");
    }
    DistortionDensity d(Kind::kFunction);
    d.fn_ = std::make_shared<std::function<double(double)>>(std::move(zeta));
    d.label_ = std::move(label);
    return d;
  }

  // lambda * first + (1 - lambda) * second; Dirac components are not mixable.
  static DistortionDensity mixture(double lambda, const DistortionDensity& first,
                                   const DistortionDensity& second) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("mixture weight must lie in [0,1]");
    if (first.is_dirac() || second.is_dirac()) {
      throw ArgumentError("Dirac densities cannot be mixed");
    }
    // both components are normalised, so the mixture is too
    DistortionDensity d(Kind::kFunction);
    d.fn_ = std::make_shared<std::function<double(double)>>(
        [lambda, first, second](double u) { return lambda * first(u) + (1.0 - lambda) * second(u); });
    d.label_ = "mixture";
    return d;
  }

  Kind kind() const { return kind_; }
  bool is_dirac() const { return kind_ == Kind::kDirac; }
  double alpha() const { return alpha_; }

  std::string describe() const {
    switch (kind_) {
      case Kind::kUniform: return "uniform";
      case Kind::kDirac: return "dirac(" + std::to_string(alpha_) + ")";
      case Kind::kTable: return "table[" + std::to_string(table_.size()) + "]";
      case Kind::kFunction: return label_;
    }
    return "unknown";
  }

  double operator()(double u) const {
    switch (kind_) {
      case Kind::kUniform: return 1.0;
      case Kind::kDirac: throw ArgumentError("a Dirac density has no pointwise value");
      case Kind::kTable: {
        const auto cells = table_.size();
        auto idx = static_cast<std::size_t>(u * static_cast<double>(cells));
        return table_[std::min(idx, cells - 1)];
      }
      case Kind::kFunction: return (*fn_)(u);
    }
    return 0.0;
  }

 private:
  explicit DistortionDensity(Kind kind) : kind_(kind) {}

  Kind kind_;
  double alpha_ = 0.0;
  std::vector<double> table_;
  std::shared_ptr<std::function<double(double)>> fn_;
  std::string label_;
};

namespace detail {

inline Vector rank_weights(const QuantileGrid& grid, const DistortionDensity& zeta) {
  Vector w(grid.sample_size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = zeta(grid.ranks(i));
  return w;
}

}  // namespace detail

// Empirical E[theta(X) zeta(U)] with U the rank transform of theta(X).
inline double distorted_value(std::span<const double> theta, const DistortionDensity& zeta) {
  if (theta.empty()) throw ArgumentError("distorted value of an empty sample");
  if (zeta.is_dirac()) return empirical_quantile(theta, zeta.alpha());
  const auto grid = QuantileGrid::build(theta, {0.5});
  const Vector w = detail::rank_weights(grid, zeta);
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) acc += theta[i] * w(static_cast<Eigen::Index>(i));
  return acc / static_cast<double>(theta.size());
}

inline double distorted_value(const Vector& theta, const DistortionDensity& zeta) {
  return distorted_value(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())),
                         zeta);
}

// Sensitivity of the distorted value to a proportional scaling of feature j:
// empirical E[X_j theta_j(X) zeta(U)]. A Dirac density is routed to the
// smoothed first-order attribution S_j(alpha) at reference point 0.
inline double distortion_sensitivity(ModelPtr model, const RowMatrix& x, int j,
                                     const DistortionDensity& zeta,
                                     const SmootherConfig& smoother = {}) {
  if (!model) throw ArgumentError("distortion sensitivity needs a model");
  if (j < 0 || j >= x.cols()) throw ArgumentError("unknown feature index " + std::to_string(j));
  if (x.rows() == 0) throw ArgumentError("distortion sensitivity of an empty sample");
  if (zeta.is_dirac()) {
    EngineConfig cfg;
    cfg.levels = {zeta.alpha()};
    cfg.smoother = smoother;
    AttributionEngine engine(std::move(model), x, cfg);
    return engine.first_order(Vector::Zero(x.cols()))(0, j);
  }
  const DerivativeBatch batch = evaluate_batch(*model, x, 1);
  const auto grid = QuantileGrid::build(batch.values, {0.5});
  const Vector w = detail::rank_weights(grid, zeta);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) acc += x(i, j) * batch.gradients(i, j) * w(i);
  return acc / static_cast<double>(x.rows());
}

}  // namespace macq
