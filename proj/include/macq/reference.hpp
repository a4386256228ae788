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
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "macq/engine.hpp"
#include "macq/error.hpp"
#include "macq/model.hpp"

namespace macq {

// G(a) = sum_l r_l(a)^2 with the second-order quantile residual
//   r_l(a) = F^{-1}(alpha_l) - theta(a) + E[(a - X)' grad | A_l]
//            + 1/2 E[(a - X)' Hess (a - X) | A_l].
// a enters the conditional expectations only through a quadratic form, so the
// smoothed moments E[grad], E[Hess X], E[Hess], E[X' grad], E[X' Hess X] are
// computed once and every evaluation costs O(L q^2).
class ReferenceObjective {
 public:
  explicit ReferenceObjective(const AttributionEngine& engine)
      : engine_(&engine), q_(engine.dim()) {
    const auto& x = engine.data();
    const auto& batch = engine.derivatives();
    const Eigen::Index n = engine.size();
    const Eigen::Index tri = q_ * (q_ + 1) / 2;
    const Eigen::Index cols = 2 * q_ + tri + 2;
    RowMatrix z(n, cols);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Matrix& h = batch.hessians[static_cast<std::size_t>(i)];
      const Vector xi = x.row(i).transpose();
      const Vector gi = batch.gradients.row(i).transpose();
      const Vector hx = h * xi;
      Eigen::Index c = 0;
      for (Eigen::Index j = 0; j < q_; ++j) z(i, c++) = gi(j);
      for (Eigen::Index j = 0; j < q_; ++j) z(i, c++) = hx(j);
      for (Eigen::Index j = 0; j < q_; ++j) {
        for (Eigen::Index k = j; k < q_; ++k) z(i, c++) = h(j, k);
      }
      z(i, c++) = xi.dot(gi);
      z(i, c++) = xi.dot(hx);
    }
    const Matrix m = engine.smoother().smooth_columns(z);
    const Eigen::Index L = m.rows();
    mean_grad_ = m.leftCols(q_);
    mean_hess_x_ = m.middleCols(q_, q_);
    mean_hess_.assign(static_cast<std::size_t>(L), Matrix(q_, q_));
    for (Eigen::Index l = 0; l < L; ++l) {
      Eigen::Index c = 2 * q_;
      for (Eigen::Index j = 0; j < q_; ++j) {
        for (Eigen::Index k = j; k < q_; ++k) {
          mean_hess_[static_cast<std::size_t>(l)](j, k) = m(l, c);
          mean_hess_[static_cast<std::size_t>(l)](k, j) = m(l, c);
          ++c;
        }
      }
    }
    mean_x_grad_ = m.col(2 * q_ + tri);
    mean_x_hess_x_ = m.col(2 * q_ + tri + 1);
  }

  Eigen::Index dim() const { return q_; }

  // r_l(a) for every level, which equals F^{-1}(alpha_l) - C22_l(a).
  Vector residuals(const Vector& a) const {
    check(a);
    return residuals_given(a, engine_->model().canonical(a));
  }

  double value(const Vector& a) const { return residuals(a).squaredNorm(); }

  // 2 sum_l r_l(a) (-grad theta(a) + E[grad|A_l] + E[Hess|A_l] a - E[Hess X|A_l])
  Vector gradient(const Vector& a) const { return value_and_gradient(a).second; }

  std::pair<double, Vector> value_and_gradient(const Vector& a) const {
    check(a);
    const LocalDerivatives at = engine_->model().derivatives(a, 1);
    const Vector r = residuals_given(a, at.value);
    Vector grad = Vector::Zero(q_);
    for (Eigen::Index l = 0; l < r.size(); ++l) {
      const auto li = static_cast<std::size_t>(l);
      Vector dr = -at.gradient + mean_grad_.row(l).transpose() + mean_hess_[li] * a -
                  mean_hess_x_.row(l).transpose();
      grad += 2.0 * r(l) * dr;
    }
    return {r.squaredNorm(), grad};
  }

 private:
  void check(const Vector& a) const {
    if (a.size() != q_) throw ShapeError("reference point dimension mismatch");
    if (!a.allFinite()) throw DomainError("reference point must be finite");
  }

  Vector residuals_given(const Vector& a, double theta_a) const {
    const Vector& quantiles = engine_->grid().quantiles;
    Vector r(quantiles.size());
    for (Eigen::Index l = 0; l < r.size(); ++l) {
      const auto li = static_cast<std::size_t>(l);
      const double linear = mean_grad_.row(l).dot(a) - mean_x_grad_(l);
      const double quad = a.dot(mean_hess_[li] * a) - 2.0 * mean_hess_x_.row(l).dot(a) +
                          mean_x_hess_x_(l);
      r(l) = quantiles(l) - theta_a + linear + 0.5 * quad;
    }
    return r;
  }

  const AttributionEngine* engine_;
  Eigen::Index q_;
  Matrix mean_grad_;     // L x q
  Matrix mean_hess_x_;   // L x q
  std::vector<Matrix> mean_hess_;
  Vector mean_x_grad_;
  Vector mean_x_hess_x_;
};

struct DescentConfig {
  int steps = 500;
  double rate = 1e-2;            // step length: rate / ||grad G||
  double gradient_tolerance = 1e-10;
  bool backtracking = false;     // halve the step while G increases
  int max_halvings = 30;
  int snapshot_every = 10;
};

struct ReferenceSnapshot {
  int iteration = 0;
  Vector a;
};

struct ReferenceSearchState {
  Vector a;                  // last iterate
  int iteration = 0;
  std::vector<double> objective;      // G(a^(0..t))
  std::vector<double> gradient_norm;  // ||grad G(a^(0..t))||
  std::vector<double> best_objective; // running minimum of objective
  Vector best_a;
  double best_value = 0.0;
  std::vector<ReferenceSnapshot> snapshots;
  std::string stop_reason;
  bool aborted = false;
  DescentConfig config;
};

// Normalised gradient descent a <- a - rate * grad / ||grad||. The iteration is
// not monotone in general, so the best point seen is reported.
inline ReferenceSearchState optimize_reference(const ReferenceObjective& objective,
                                               const Vector& a0, const DescentConfig& cfg = {}) {
  if (cfg.steps < 1) throw ArgumentError("reference search needs steps >= 1");
  if (!(cfg.rate > 0.0)) throw ArgumentError("learning rate must be positive");
  ReferenceSearchState st;
  st.config = cfg;
  st.a = a0;
  auto [g, grad] = objective.value_and_gradient(a0);
  if (!std::isfinite(g) || !grad.allFinite()) {
    throw NumericError("reference objective is not finite at the starting point");
  }
  auto record = [&](double value, const Vector& gr) {
    st.objective.push_back(value);
    st.gradient_norm.push_back(gr.norm());
    if (st.best_objective.empty() || value < st.best_value) {
      st.best_value = value;
      st.best_a = st.a;
    }
    st.best_objective.push_back(st.best_value);
    if (cfg.snapshot_every > 0 && st.iteration % cfg.snapshot_every == 0) {
      st.snapshots.push_back({st.iteration, st.a});
    }
  };
  record(g, grad);
  st.stop_reason = "step budget";
  while (st.iteration < cfg.steps) {
    const double norm = grad.norm();
    if (norm < cfg.gradient_tolerance) {
      st.stop_reason = "gradient tolerance";
      break;
    }
    double step = cfg.rate / norm;
    Vector next = st.a - step * grad;
    auto [g_next, grad_next] = objective.value_and_gradient(next);
    if (cfg.backtracking) {
      for (int h = 0; h < cfg.max_halvings && std::isfinite(g_next) && g_next > g; ++h) {
        step *= 0.5;
        next = st.a - step * grad;
        std::tie(g_next, grad_next) = objective.value_and_gradient(next);
      }
    }
    if (!std::isfinite(g_next) || !grad_next.allFinite()) {
      st.aborted = true;
      st.stop_reason = "non-finite objective at iteration " + std::to_string(st.iteration + 1);
      break;
    }
    st.a = std::move(next);
    g = g_next;
    grad = std::move(grad_next);
    ++st.iteration;
    record(g, grad);
  }
  return st;
}

inline double objective_G(ModelPtr model, const RowMatrix& x, const Vector& a,
                          const EngineConfig& cfg = {}) {
  AttributionEngine engine(std::move(model), x, cfg);
  return ReferenceObjective(engine).value(a);
}

inline Vector gradient_G(ModelPtr model, const RowMatrix& x, const Vector& a,
                         const EngineConfig& cfg = {}) {
  AttributionEngine engine(std::move(model), x, cfg);
  return ReferenceObjective(engine).gradient(a);
}

}  // namespace macq
