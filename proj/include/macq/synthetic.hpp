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
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "macq/dataset.hpp"
#include "macq/error.hpp"
#include "macq/model.hpp"
#include "macq/rng.hpp"

namespace macq {

// A dataset together with the exact model that generated its responses.
struct SyntheticProblem {
  std::string name;
  Dataset data;  // raw == standardized, identity transform
  ModelPtr model;
};

inline const std::vector<std::string>& synthetic_names() {
  static const std::vector<std::string> names{
      "linear-3atom", "quadratic-4atom", "linear",   "additive-tanh",
      "planted-interaction", "quadratic", "product", "dominant", "nonlinear"};
  return names;
}

namespace detail {

inline Dataset finish_dataset(RowMatrix x, const SmoothModel& model, std::uint64_t seed) {
  Dataset d;
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  d.y.resize(x.rows());
  Rng rng(stream_seed(seed, "responses"));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    d.y(i) = rng.uniform() < model.mean(x.row(i).transpose()) ? 1.0 : 0.0;
  }
  d.raw = x;
  d.standardized = std::move(x);
  d.standardization = Standardization::identity(d.raw.cols());
  return d;
}

inline RowMatrix gaussian_matrix(Eigen::Index n, Eigen::Index q, std::uint64_t seed) {
  Rng rng(stream_seed(seed, "features"));
  RowMatrix x(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) x(i, j) = rng.normal();
  }
  return x;
}

inline ModelPtr polynomial2(std::string name, double c0, Vector linear, Matrix quad) {
  // theta = c0 + linear' x + x' quad x, quad symmetric
  const int q = static_cast<int>(linear.size());
  return std::make_shared<AnalyticModel>(
      std::move(name), q,
      [=](const Vector& x) { return c0 + linear.dot(x) + x.dot(quad * x); },
      [=](const Vector& x) { return (linear + 2.0 * quad * x).eval(); },
      [=](const Vector&) { return (2.0 * quad).eval(); });
}

}  // namespace detail

inline ModelPtr make_linear_model(double intercept, Vector coefficients) {
  return std::make_shared<LinearModel>(intercept, std::move(coefficients));
}

// theta(x) = sum_j c_j tanh(x_j)
inline ModelPtr make_additive_tanh_model(Vector c) {
  const int q = static_cast<int>(c.size());
  return std::make_shared<AnalyticModel>(
      "additive-tanh", q,
      [c](const Vector& x) { return c.dot(x.array().tanh().matrix()); },
      [c](const Vector& x) {
        return (c.array() * (1.0 - x.array().tanh().square())).matrix().eval();
      },
      [c](const Vector& x) {
        const Eigen::ArrayXd t = x.array().tanh();
        return Matrix((c.array() * (-2.0 * t * (1.0 - t.square()))).matrix().asDiagonal());
      });
}

// theta = x1 + x2 + 3 x1 x2 on the first two coordinates of R^q
inline ModelPtr make_planted_interaction_model(int q = 3) {
  if (q < 2) throw ArgumentError("planted interaction needs q >= 2");
  Vector lin = Vector::Zero(q);
  lin(0) = 1.0;
  lin(1) = 1.0;
  Matrix quad = Matrix::Zero(q, q);
  quad(0, 1) = quad(1, 0) = 1.5;
  return detail::polynomial2("planted-interaction", 0.0, lin, quad);
}

// theta = x1 x2 (+ 0 * remaining coordinates)
inline ModelPtr make_product_model(int q = 2) {
  Matrix quad = Matrix::Zero(q, q);
  quad(0, 1) = quad(1, 0) = 0.5;
  return detail::polynomial2("product", 0.0, Vector::Zero(q), quad);
}

// theta = ||x||^2
inline ModelPtr make_square_norm_model(int q) {
  return detail::polynomial2("quadratic", 0.0, Vector::Zero(q), Matrix::Identity(q, q));
}

// A smooth non-polynomial model with saturating main effects and a bounded
// interaction, loosely shaped like a fitted tanh network.
inline ModelPtr make_nonlinear_model() {
  // theta = -1.5 + 1.2 tanh(x1 + 0.5) - 0.8 tanh(x2 - 0.7)^2
  //         + 0.9 tanh((x1 - 0.6) x3) + 0.3 x4
  auto value = [](const Vector& x) {
    const double t1 = std::tanh(x(1) - 0.7);
    return -1.5 + 1.2 * std::tanh(x(0) + 0.5) - 0.8 * t1 * t1 +
           0.9 * std::tanh((x(0) - 0.6) * x(2)) + 0.3 * x(3);
  };
  auto grad = [](const Vector& x) {
    const double c = x(0) - 0.6;
    const double t0 = std::tanh(x(0) + 0.5), t1 = std::tanh(x(1) - 0.7), tu = std::tanh(c * x(2));
    const double s0 = 1.0 - t0 * t0, s1 = 1.0 - t1 * t1, su = 1.0 - tu * tu;
    Vector g(4);
    g << 1.2 * s0 + 0.9 * su * x(2), -1.6 * t1 * s1, 0.9 * su * c, 0.3;
    return g;
  };
  auto hess = [](const Vector& x) {
    const double c = x(0) - 0.6;
    const double t0 = std::tanh(x(0) + 0.5), t1 = std::tanh(x(1) - 0.7), tu = std::tanh(c * x(2));
    const double s0 = 1.0 - t0 * t0, s1 = 1.0 - t1 * t1, su = 1.0 - tu * tu;
    const double du = -2.0 * tu * su;  // tanh'' at (x1 - 0.6) x3
    Matrix h = Matrix::Zero(4, 4);
    h(0, 0) = 1.2 * (-2.0 * t0 * s0) + 0.9 * du * x(2) * x(2);
    h(1, 1) = -1.6 * (s1 * s1 - 2.0 * t1 * t1 * s1);
    h(2, 2) = 0.9 * du * c * c;
    h(0, 2) = h(2, 0) = 0.9 * (su + du * c * x(2));
    return h;
  };
  return std::make_shared<AnalyticModel>("nonlinear", 4, value, grad, hess);
}

// Fixtures with analytic ground truth. Discrete-atom fixtures assign atoms
// cyclically so every atom has the same multiplicity when n is a multiple of
// the atom count.
inline SyntheticProblem make_synthetic(const std::string& name, Eigen::Index n,
                                       std::uint64_t seed) {
  if (n < 1) throw ArgumentError("synthetic sample size must be >= 1");
  SyntheticProblem p;
  p.name = name;
  RowMatrix x;
  if (name == "linear-3atom") {
    x.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i % 3);
    p.model = make_linear_model(1.0, Vector::Constant(1, 2.0));
  } else if (name == "quadratic-4atom") {
    static const double atoms[] = {-2.0, -1.0, 1.0, 2.0};
    x.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = atoms[i % 4];
    p.model = make_square_norm_model(1);
  } else if (name == "linear") {
    x = detail::gaussian_matrix(n, 5, seed);
    Vector beta(5);
    beta << 1.0, -0.5, 0.25, 2.0, -1.0;
    p.model = make_linear_model(0.5, beta);
  } else if (name == "additive-tanh") {
    x = detail::gaussian_matrix(n, 3, seed);
    Vector c(3);
    c << 1.5, -1.0, 0.5;
    p.model = make_additive_tanh_model(c);
  } else if (name == "planted-interaction") {
    // x1, x2 uniform on {-1, 0, 1} (all nine pairs equally often), x3 ~ N(0,1)
    x = detail::gaussian_matrix(n, 3, seed);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = static_cast<double>(i % 3) - 1.0;
      x(i, 1) = static_cast<double>((i / 3) % 3) - 1.0;
    }
    p.model = make_planted_interaction_model(3);
  } else if (name == "quadratic") {
    x = detail::gaussian_matrix(n, 2, seed);
    p.model = make_square_norm_model(2);
  } else if (name == "product") {
    x = detail::gaussian_matrix(n, 2, seed);
    p.model = make_product_model(2);
  } else if (name == "dominant") {
    x = detail::gaussian_matrix(n, 3, seed);
    Vector beta(3);
    beta << 5.0, 0.1, 0.0;
    p.model = make_linear_model(0.0, beta);
  } else if (name == "nonlinear") {
    x = detail::gaussian_matrix(n, 4, seed);
    p.model = make_nonlinear_model();
  } else {
    std::string valid;
    for (const auto& s : synthetic_names()) valid += (valid.empty() ? "" : ", ") + s;
    throw ArgumentError("unknown synthetic generator '" + name + "' (valid: " + valid + ")");
  }
  p.data = detail::finish_dataset(std::move(x), *p.model, seed);
  return p;
}

}  // namespace macq
