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
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "macq/derivatives.hpp"
#include "macq/error.hpp"
#include "macq/model.hpp"
#include "macq/quantile.hpp"
#include "macq/smoother.hpp"

namespace macq {

struct EngineConfig {
  std::vector<double> levels = percent_levels();
  SmootherConfig smoother;
  double screening_threshold = 0.2;
};

struct InteractionPair {
  int j = 0;
  int k = 0;
  double max_abs = 0.0;

  friend bool operator==(const InteractionPair&, const InteractionPair&) = default;
};

// All quantile-level attributions relative to one reference point a.
struct AttributionReport {
  std::vector<double> levels;
  Vector quantiles;          // empirical F^{-1}(alpha_l) of theta(X)
  Vector reference;          // a
  double reference_value = 0.0;  // theta(a)
  Matrix S;                  // L x q first-order attributions
  std::vector<Matrix> T;     // L blocks of q x q second-order attributions
  Vector C1, C2, C22;
  Matrix V;                  // L x q allocated attributions
  Vector residuals_first_order;
  Vector residuals_second_order;
  double screening_threshold = 0.2;
  std::vector<InteractionPair> interactions;

  std::size_t num_levels() const { return levels.size(); }
  Eigen::Index dim() const { return S.cols(); }
};

struct ContributionCurves {
  Vector C1, C2, C22;
};

inline void check_attribution_shapes(const Matrix& S, const std::vector<Matrix>& T) {
  if (static_cast<std::size_t>(S.rows()) != T.size()) {
    throw ShapeError("S has " + std::to_string(S.rows()) + " levels, T has " +
                     std::to_string(T.size()));
  }
  for (const auto& t : T) {
    if (t.rows() != S.cols() || t.cols() != S.cols()) {
      throw ShapeError("T blocks must be q x q with q = " + std::to_string(S.cols()));
    }
  }
}

// C1 = theta(a) + sum_j S_j
// C2 = C1 - 1/2 sum_j T_jj
// C22 = C2 - sum_{j<k} T_jk
inline ContributionCurves contribution_curves(const Matrix& S, const std::vector<Matrix>& T,
                                              double reference_value) {
  check_attribution_shapes(S, T);
  const Eigen::Index L = S.rows(), q = S.cols();
  ContributionCurves c{Vector(L), Vector(L), Vector(L)};
  for (Eigen::Index l = 0; l < L; ++l) {
    const Matrix& t = T[static_cast<std::size_t>(l)];
    double off = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      for (Eigen::Index k = j + 1; k < q; ++k) off += t(j, k);
    }
    c.C1(l) = reference_value + S.row(l).sum();
    c.C2(l) = c.C1(l) - 0.5 * t.diagonal().sum();
    c.C22(l) = c.C2(l) - off;
  }
  return c;
}

// V_j = S_j - 1/2 sum_k T_jk: interaction terms split evenly between the two
// features involved.
inline Matrix allocated_attributions(const Matrix& S, const std::vector<Matrix>& T) {
  check_attribution_shapes(S, T);
  Matrix V(S.rows(), S.cols());
  for (Eigen::Index l = 0; l < S.rows(); ++l) {
    const Matrix& t = T[static_cast<std::size_t>(l)];
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
      V(l, j) = S(l, j) - 0.5 * t.row(j).sum();
    }
  }
  return V;
}

// Pairs j < k whose interaction attribution exceeds `threshold` in absolute
// value at some level, strongest first (ties by (j, k)).
inline std::vector<InteractionPair> screen_interactions(const std::vector<Matrix>& T,
                                                        double threshold = 0.2) {
  if (!(threshold >= 0.0)) throw ArgumentError("screening threshold must be >= 0");
  std::vector<InteractionPair> pairs;
  if (T.empty()) return pairs;
  const Eigen::Index q = T.front().rows();
  for (const auto& t : T) {
    if (t.rows() != q || t.cols() != q) throw ShapeError("inconsistent T block shapes");
  }
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index k = j + 1; k < q; ++k) {
      double m = 0.0;
      for (const auto& t : T) m = std::max(m, std::abs(t(j, k)));
      if (m > threshold) {
        pairs.push_back({static_cast<int>(j), static_cast<int>(k), m});
      }
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.max_abs > b.max_abs; });
  return pairs;
}

struct ApproximationResiduals {
  Vector first_order;
  Vector second_order;
};

inline ApproximationResiduals approximation_residuals(const Vector& quantiles,
                                                      const Vector& C1, const Vector& C22) {
  if (quantiles.size() != C1.size() || quantiles.size() != C22.size()) {
    throw ShapeError("residual inputs must share the grid length");
  }
  return {(quantiles - C1).cwiseAbs(), (quantiles - C22).cwiseAbs()};
}

// Per-instance marginal contributions
//   omega_ij = (x_ij - a_j) theta_j(x_i) - 1/2 (x_ij - a_j)^2 theta_jj(x_i)
// for a subset of features, with their smoothed mean and one-sd band.
struct IndividualContributions {
  std::vector<int> features;
  RowMatrix omega;        // n x |features|
  RowMatrix feature_values;  // n x |features|, model input units
  Vector ranks;           // rank(theta_i)/n
  Vector mean_response;   // sigmoid(theta_i)
  Matrix band_mean;       // L x |features|
  Matrix band_sd;         // L x |features|
};

// Precomputes theta, the quantile grid, the shared smoother and all
// per-instance derivatives for one (model, data) pair; attributions for any
// reference point are then pure functions of a.
class AttributionEngine {
 public:
  AttributionEngine(ModelPtr model, RowMatrix x, EngineConfig cfg = {})
      : model_(std::move(model)), x_(std::move(x)), cfg_(std::move(cfg)) {
    if (!model_) throw ArgumentError("engine needs a model");
    if (x_.cols() != model_->input_dim()) {
      throw ShapeError("data has " + std::to_string(x_.cols()) + " features, model expects " +
                       std::to_string(model_->input_dim()));
    }
    if (!x_.allFinite()) throw DomainError("data contains non-finite values");
    batch_ = evaluate_batch(*model_, x_, 2);
    grid_ = QuantileGrid::build(batch_.values, cfg_.levels);
    smoother_ = std::make_unique<LocalSmoother>(grid_, cfg_.smoother);
  }

  AttributionEngine(const AttributionEngine&) = delete;
  AttributionEngine& operator=(const AttributionEngine&) = delete;

  const SmoothModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const RowMatrix& data() const { return x_; }
  const EngineConfig& config() const { return cfg_; }
  const QuantileGrid& grid() const { return grid_; }
  const LocalSmoother& smoother() const { return *smoother_; }
  const DerivativeBatch& derivatives() const { return batch_; }
  Eigen::Index dim() const { return x_.cols(); }
  Eigen::Index size() const { return x_.rows(); }

  // S[l, j] = E[(x_j - a_j) theta_j(x) | level l]
  Matrix first_order(const Vector& a) const {
    check_reference(a);
    RowMatrix z(size(), dim());
    for (Eigen::Index i = 0; i < size(); ++i) {
      for (Eigen::Index j = 0; j < dim(); ++j) {
        z(i, j) = (x_(i, j) - a(j)) * batch_.gradients(i, j);
      }
    }
    return smoother_->smooth_columns(z);
  }

  // T[l](j, k) = E[(x_j - a_j)(x_k - a_k) theta_jk(x) | level l]
  std::vector<Matrix> second_order(const Vector& a) const {
    check_reference(a);
    const Eigen::Index q = dim();
    const Eigen::Index pairs = q * (q + 1) / 2;
    RowMatrix z(size(), pairs);
    for (Eigen::Index i = 0; i < size(); ++i) {
      const Matrix& h = batch_.hessians[static_cast<std::size_t>(i)];
      Eigen::Index c = 0;
      for (Eigen::Index j = 0; j < q; ++j) {
        const double dj = x_(i, j) - a(j);
        for (Eigen::Index k = j; k < q; ++k) {
          z(i, c++) = dj * (x_(i, k) - a(k)) * 0.5 * (h(j, k) + h(k, j));
        }
      }
    }
    const Matrix smoothed = smoother_->smooth_columns(z);
    std::vector<Matrix> T(grid_.size(), Matrix(q, q));
    for (std::size_t l = 0; l < grid_.size(); ++l) {
      Eigen::Index c = 0;
      for (Eigen::Index j = 0; j < q; ++j) {
        for (Eigen::Index k = j; k < q; ++k) {
          const double v = smoothed(static_cast<Eigen::Index>(l), c++);
          T[l](j, k) = v;
          T[l](k, j) = v;
        }
      }
    }
    return T;
  }

  AttributionReport analyze(const Vector& a) const {
    AttributionReport r;
    r.levels = grid_.levels;
    r.quantiles = grid_.quantiles;
    r.reference = a;
    r.reference_value = model_->canonical(a);
    r.S = first_order(a);
    r.T = second_order(a);
    auto curves = contribution_curves(r.S, r.T, r.reference_value);
    r.C1 = std::move(curves.C1);
    r.C2 = std::move(curves.C2);
    r.C22 = std::move(curves.C22);
    r.V = allocated_attributions(r.S, r.T);
    auto res = approximation_residuals(r.quantiles, r.C1, r.C22);
    r.residuals_first_order = std::move(res.first_order);
    r.residuals_second_order = std::move(res.second_order);
    r.screening_threshold = cfg_.screening_threshold;
    r.interactions = screen_interactions(r.T, cfg_.screening_threshold);
    return r;
  }

  IndividualContributions individual(const Vector& a, std::vector<int> features) const {
    check_reference(a);
    for (int j : features) {
      if (j < 0 || j >= dim()) {
        throw ArgumentError("unknown feature index " + std::to_string(j));
      }
    }
    const auto m = static_cast<Eigen::Index>(features.size());
    IndividualContributions out;
    out.omega.resize(size(), m);
    out.feature_values.resize(size(), m);
    out.ranks = grid_.ranks;
    out.mean_response.resize(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      out.mean_response(i) = sigmoid(batch_.values(i));
      const Matrix& h = batch_.hessians[static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < m; ++c) {
        const int j = features[static_cast<std::size_t>(c)];
        const double d = x_(i, j) - a(j);
        out.omega(i, c) = d * batch_.gradients(i, j) - 0.5 * d * d * h(j, j);
        out.feature_values(i, c) = x_(i, j);
      }
    }
    out.band_mean = smoother_->smooth_columns(out.omega);
    const Matrix second = smoother_->smooth_columns(RowMatrix(out.omega.array().square()));
    out.band_sd = (second.array() - out.band_mean.array().square()).max(0.0).sqrt().matrix();
    out.features = std::move(features);
    return out;
  }

 private:
  void check_reference(const Vector& a) const {
    if (a.size() != dim()) {
      throw ShapeError("reference point has dimension " + std::to_string(a.size()) +
                       ", expected " + std::to_string(dim()));
    }
    if (!a.allFinite()) throw DomainError("reference point must be finite");
  }

  ModelPtr model_;
  RowMatrix x_;
  EngineConfig cfg_;
  DerivativeBatch batch_;
  QuantileGrid grid_;
  std::unique_ptr<LocalSmoother> smoother_;
};

// Stand-alone entry points; each builds its own engine.
inline Matrix first_order_attributions(ModelPtr model, const RowMatrix& x, const Vector& a,
                                       const EngineConfig& cfg = {}) {
  return AttributionEngine(std::move(model), x, cfg).first_order(a);
}

inline std::vector<Matrix> second_order_attributions(ModelPtr model, const RowMatrix& x,
                                                     const Vector& a,
                                                     const EngineConfig& cfg = {}) {
  return AttributionEngine(std::move(model), x, cfg).second_order(a);
}

inline IndividualContributions individual_contributions(ModelPtr model, const RowMatrix& x,
                                                        const Vector& a,
                                                        std::vector<int> features,
                                                        const EngineConfig& cfg = {}) {
  return AttributionEngine(std::move(model), x, cfg).individual(a, std::move(features));
}

}  // namespace macq
