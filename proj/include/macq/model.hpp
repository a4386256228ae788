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
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "macq/error.hpp"

namespace macq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Feature matrices are stored one instance per row.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Logistic link. Clamped so the mean stays strictly inside (0, 1) for every
// finite canonical value.
inline double sigmoid(double theta) {
  constexpr double kLo = std::numeric_limits<double>::denorm_min();
  static const double kHi = std::nextafter(1.0, 0.0);
  double mu;
  if (theta >= 0.0) {
    mu = 1.0 / (1.0 + std::exp(-theta));
  } else {
    const double e = std::exp(theta);
    mu = e / (1.0 + e);
  }
  return std::clamp(mu, kLo, kHi);
}

// Value, gradient and (optionally) Hessian of the canonical map at one point.
struct LocalDerivatives {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;  // empty when only first order was requested
};

// A twice continuously differentiable regression map x -> theta(x) on the
// canonical (pre-sigmoid) scale. Implementations are immutable.
class SmoothModel {
 public:
  virtual ~SmoothModel() = default;

  virtual int input_dim() const = 0;
  virtual std::string describe() const = 0;

  double canonical(const Vector& x) const {
    check_input(x);
    return evaluate(x);
  }

  double mean(const Vector& x) const { return sigmoid(canonical(x)); }

  // order 1: value + gradient; order 2: value + gradient + Hessian.
  LocalDerivatives derivatives(const Vector& x, int order) const {
    if (order < 1 || order > 2) {
      throw ArgumentError("derivative order must be 1 or 2");
    }
    check_input(x);
    LocalDerivatives out;
    differentiate(x, order, out);
    return out;
  }

  void check_input(const Vector& x) const {
    if (x.size() != input_dim()) {
      throw ShapeError("model expects input of dimension " +
                       std::to_string(input_dim()) + ", got " +
                       std::to_string(x.size()));
    }
    if (!x.allFinite()) throw DomainError("model input contains non-finite values");
  }

 protected:
  virtual double evaluate(const Vector& x) const = 0;
  virtual void differentiate(const Vector& x, int order,
                             LocalDerivatives& out) const = 0;
};

using ModelPtr = std::shared_ptr<const SmoothModel>;

// theta(x) = intercept + coefficients' x
class LinearModel final : public SmoothModel {
 public:
  LinearModel(double intercept, Vector coefficients)
      : intercept_(intercept), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() == 0) throw ArgumentError("linear model needs q >= 1");
    if (!coefficients_.allFinite() || !std::isfinite(intercept_)) {
      throw DomainError("linear model parameters must be finite");
    }
  }

  int input_dim() const override { return static_cast<int>(coefficients_.size()); }
  std::string describe() const override { return "linear"; }
  double intercept() const { return intercept_; }
  const Vector& coefficients() const { return coefficients_; }

 protected:
  double evaluate(const Vector& x) const override {
    return intercept_ + coefficients_.dot(x);
  }
  void differentiate(const Vector& x, int order,
                     LocalDerivatives& out) const override {
    out.value = evaluate(x);
    out.gradient = coefficients_;
    if (order == 2) out.hessian = Matrix::Zero(input_dim(), input_dim());
  }

 private:
  double intercept_;
  Vector coefficients_;
};

// A model given by closed-form callables. Used for synthetic fixtures whose
// derivatives are known analytically.
class AnalyticModel final : public SmoothModel {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  AnalyticModel(std::string name, int dim, ValueFn value, GradientFn gradient,
                HessianFn hessian)
      : name_(std::move(name)),
        dim_(dim),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        hessian_(std::move(hessian)) {
    if (dim_ < 1) throw ArgumentError("analytic model needs q >= 1");
  }

  int input_dim() const override { return dim_; }
  std::string describe() const override { return name_; }

 protected:
  double evaluate(const Vector& x) const override { return value_(x); }
  void differentiate(const Vector& x, int order,
                     LocalDerivatives& out) const override {
    out.value = value_(x);
    out.gradient = gradient_(x);
    if (order == 2) out.hessian = hessian_(x);
  }

 private:
  std::string name_;
  int dim_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

// x -> theta(offset + x); the translated model used to re-anchor a reference
// point at the origin.
class ShiftedModel final : public SmoothModel {
 public:
  ShiftedModel(ModelPtr base, Vector offset)
      : base_(std::move(base)), offset_(std::move(offset)) {
    if (!base_) throw ArgumentError("shifted model needs a base model");
    if (offset_.size() != base_->input_dim()) {
      throw ShapeError("shift offset does not match model dimension");
    }
  }

  int input_dim() const override { return base_->input_dim(); }
  std::string describe() const override { return "shifted(" + base_->describe() + ")"; }

 protected:
  double evaluate(const Vector& x) const override {
    return base_->canonical(offset_ + x);
  }
  void differentiate(const Vector& x, int order,
                     LocalDerivatives& out) const override {
    out = base_->derivatives(offset_ + x, order);
  }

 private:
  ModelPtr base_;
  Vector offset_;
};

inline ModelPtr make_constant_model(int dim, double c) {
  return std::make_shared<AnalyticModel>(
      "constant", dim, [c](const Vector&) { return c; },
      [dim](const Vector&) { return Vector::Zero(dim).eval(); },
      [dim](const Vector&) { return Matrix::Zero(dim, dim).eval(); });
}

}  // namespace macq
