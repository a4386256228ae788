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

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "macq/error.hpp"
#include "macq/model.hpp"
#include "macq/quantile.hpp"

namespace macq {

struct SmootherConfig {
  int degree = 2;
  double bandwidth_fraction = 0.1;  // nearest-neighbour span in rank space
  double ridge = 1e-10;

  void validate() const {
    if (degree < 0 || degree > 2) throw ArgumentError("smoother degree must be 0, 1 or 2");
    if (!(bandwidth_fraction > 0.0 && bandwidth_fraction <= 1.0)) {
      throw ArgumentError("bandwidth fraction must lie in (0,1]");
    }
    if (!(ridge >= 0.0)) throw ArgumentError("ridge must be non-negative");
  }
};

// Local polynomial regression of a per-instance quantity on the rank variable
// u_i = rank(theta_i)/n, evaluated at each grid level.
//
// For every level the fit is reduced to its equivalent kernel: a fixed weight
// vector over a contiguous window of sorted positions, so smoothing any
// quantity is a dot product. All conditional expectations share these
// weights, which makes the smoother exactly linear in the data.
class LocalSmoother {
 public:
  LocalSmoother(const QuantileGrid& grid, SmootherConfig cfg)
      : grid_(&grid), cfg_(cfg) {
    cfg_.validate();
    const auto n = static_cast<std::size_t>(grid.sample_size());
    const auto min_n = static_cast<std::size_t>(3 * (cfg_.degree + 1));
    if (n < min_n) {
      throw ArgumentError("smoother needs at least " + std::to_string(min_n) +
                          " observations, got " + std::to_string(n));
    }
    const auto k = static_cast<std::size_t>(
        std::ceil(cfg_.bandwidth_fraction * static_cast<double>(n) - 1e-9));
    kernels_.reserve(grid.size());
    for (std::size_t l = 0; l < grid.size(); ++l) {
      kernels_.push_back(build_kernel(l, std::max<std::size_t>(k, 1), n));
    }
  }

  const QuantileGrid& grid() const { return *grid_; }
  const SmootherConfig& config() const { return cfg_; }
  std::size_t levels() const { return kernels_.size(); }

  // z indexed by instance; returns one value per grid level.
  Vector smooth(std::span<const double> z) const {
    check_length(z.size());
    Vector out(static_cast<Eigen::Index>(kernels_.size()));
    for (std::size_t l = 0; l < kernels_.size(); ++l) {
      const auto& kern = kernels_[l];
      double acc = 0.0;
      for (Eigen::Index i = 0; i < kern.weights.size(); ++i) {
        acc += kern.weights(i) *
               z[static_cast<std::size_t>(grid_->order[kern.start + static_cast<std::size_t>(i)])];
      }
      out(static_cast<Eigen::Index>(l)) = acc;
    }
    return out;
  }

  Vector smooth(const Vector& z) const {
    return smooth(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
  }

  // Smooths every column of an n x m matrix; result is L x m.
  Matrix smooth_columns(const RowMatrix& z) const {
    check_length(static_cast<std::size_t>(z.rows()));
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(kernels_.size()), z.cols());
    for (std::size_t l = 0; l < kernels_.size(); ++l) {
      const auto& kern = kernels_[l];
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(z.cols());
      for (Eigen::Index i = 0; i < kern.weights.size(); ++i) {
        acc += kern.weights(i) * z.row(grid_->order[kern.start + static_cast<std::size_t>(i)]);
      }
      out.row(static_cast<Eigen::Index>(l)) = acc;
    }
    return out;
  }

  // Weights of level l over sorted positions [start, start + size).
  std::size_t window_start(std::size_t l) const { return kernels_.at(l).start; }
  const Vector& window_weights(std::size_t l) const { return kernels_.at(l).weights; }

 private:
  struct Kernel {
    std::size_t start = 0;
    Vector weights;
  };

  void check_length(std::size_t m) const {
    if (m != static_cast<std::size_t>(grid_->sample_size())) {
      throw ShapeError("smoothed quantity has " + std::to_string(m) +
                       " entries, grid sample has " +
                       std::to_string(grid_->sample_size()));
    }
  }

  Kernel build_kernel(std::size_t l, std::size_t k, std::size_t n) const {
    const double target = grid_->evaluation_points(static_cast<Eigen::Index>(l));
    const double dn = static_cast<double>(n);
    auto dist = [&](std::size_t p) { return std::abs(static_cast<double>(p + 1) / dn - target); };

    // nearest sorted position, then grow the window one neighbour at a time
    auto centre = static_cast<std::ptrdiff_t>(std::llround(target * dn)) - 1;
    std::size_t lo = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        centre, 0, static_cast<std::ptrdiff_t>(n) - 1));
    while (lo > 0 && dist(lo - 1) < dist(lo)) --lo;
    while (lo + 1 < n && dist(lo + 1) < dist(lo)) ++lo;
    std::size_t hi = lo;
    while (hi - lo + 1 < k) {
      const bool can_left = lo > 0, can_right = hi + 1 < n;
      if (can_left && (!can_right || dist(lo - 1) <= dist(hi + 1))) {
        --lo;
      } else {
        ++hi;
      }
    }
    double h = 0.0;
    for (std::size_t p = lo; p <= hi; ++p) h = std::max(h, dist(p));

    const int terms = cfg_.degree + 1;
    const auto m = static_cast<Eigen::Index>(hi - lo + 1);
    Vector w(m);
    Matrix basis(m, terms);
    int positive = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const std::size_t p = lo + static_cast<std::size_t>(i);
      const double r = h > 0.0 ? dist(p) / h : 1.0;
      const double c = 1.0 - r * r * r;
      w(i) = r < 1.0 ? c * c * c : 0.0;
      if (w(i) > 0.0) ++positive;
      const double t = h > 0.0 ? (static_cast<double>(p + 1) / dn - target) / h : 0.0;
      double power = 1.0;
      for (int j = 0; j < terms; ++j) {
        basis(i, j) = power;
        power *= t;
      }
    }
    if (positive < terms) {
      throw SmoothingError("smoothing window at level " +
                           std::to_string(grid_->levels[l]) + " holds " +
                           std::to_string(positive) + " weighted ranks, degree " +
                           std::to_string(cfg_.degree) + " needs " + std::to_string(terms));
    }
    Matrix normal = basis.transpose() * w.asDiagonal() * basis;
    normal.diagonal().array() += cfg_.ridge;
    Vector e1 = Vector::Zero(terms);
    e1(0) = 1.0;
    const Vector c = normal.ldlt().solve(e1);
    Kernel kern;
    kern.start = lo;
    kern.weights = (w.array() * (basis * c).array()).matrix();
    if (!kern.weights.allFinite()) {
      throw SmoothingError("degenerate smoothing window at level " +
                           std::to_string(grid_->levels[l]));
    }
    return kern;
  }

  const QuantileGrid* grid_;
  SmootherConfig cfg_;
  std::vector<Kernel> kernels_;
};

// E[z | theta = F^{-1}(alpha_l)] for every grid level.
inline Vector conditional_mean_on_grid(const Vector& z, const QuantileGrid& grid,
                                       const SmootherConfig& cfg = {}) {
  return LocalSmoother(grid, cfg).smooth(z);
}

// One conditional standard deviation per level: sqrt(max(0, E[z^2] - E[z]^2)).
inline Vector conditional_sd_on_grid(const Vector& z, const QuantileGrid& grid,
                                     const SmootherConfig& cfg = {}) {
  LocalSmoother smoother(grid, cfg);
  const Vector mean = smoother.smooth(z);
  const Vector second = smoother.smooth(Vector(z.array().square()));
  return (second.array() - mean.array().square()).max(0.0).sqrt().matrix();
}

// Convenience overloads that build the grid from the theta sample.
inline Vector conditional_mean_on_grid(const Vector& z, const Vector& theta,
                                       std::vector<double> levels,
                                       const SmootherConfig& cfg = {}) {
  if (z.size() != theta.size()) throw ShapeError("z and theta lengths differ");
  const auto grid = QuantileGrid::build(theta, std::move(levels));
  return conditional_mean_on_grid(z, grid, cfg);
}

inline Vector conditional_sd_on_grid(const Vector& z, const Vector& theta,
                                     std::vector<double> levels,
                                     const SmootherConfig& cfg = {}) {
  if (z.size() != theta.size()) throw ShapeError("z and theta lengths differ");
  const auto grid = QuantileGrid::build(theta, std::move(levels));
  return conditional_sd_on_grid(z, grid, cfg);
}

}  // namespace macq
