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

#include <string>
#include <vector>

#include "macq/error.hpp"
#include "macq/model.hpp"

namespace macq {

// d theta / d x at x, per unit of (standardized) feature.
inline Vector gradient(const SmoothModel& model, const Vector& x) {
  return model.derivatives(x, 1).gradient;
}

// Symmetric matrix of second partials of theta at x.
inline Matrix hessian(const SmoothModel& model, const Vector& x) {
  return model.derivatives(x, 2).hessian;
}

// Canonical values and derivatives for every row of a feature matrix, in row
// order. Hessians are stored densely as n blocks of q x q.
struct DerivativeBatch {
  Vector values;                  // n
  RowMatrix gradients;            // n x q
  std::vector<Matrix> hessians;   // n entries, empty when order == 1

  Eigen::Index size() const { return values.size(); }
  Eigen::Index dim() const { return gradients.cols(); }
};

inline DerivativeBatch evaluate_batch(const SmoothModel& model, const RowMatrix& x,
                                      int order = 2) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("data has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  DerivativeBatch out;
  const Eigen::Index n = x.rows();
  out.values.resize(n);
  out.gradients.resize(n, x.cols());
  if (order == 2) out.hessians.resize(static_cast<std::size_t>(n));
  Vector row(x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    row = x.row(i).transpose();
    LocalDerivatives d = model.derivatives(row, order);
    if (!std::isfinite(d.value) || !d.gradient.allFinite() ||
        (order == 2 && !d.hessian.allFinite())) {
      throw NumericError("non-finite model derivative at instance " + std::to_string(i));
    }
    out.values(i) = d.value;
    out.gradients.row(i) = d.gradient.transpose();
    if (order == 2) out.hessians[static_cast<std::size_t>(i)] = std::move(d.hessian);
  }
  return out;
}

inline Vector evaluate_values(const SmoothModel& model, const RowMatrix& x) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("data has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  }
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out(i) = model.canonical(x.row(i).transpose());
  }
  return out;
}

}  // namespace macq
