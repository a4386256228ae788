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
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "macq/dataset.hpp"
#include "macq/error.hpp"
#include "macq/mlp.hpp"
#include "macq/rng.hpp"

namespace macq {

struct FitConfig {
  std::vector<int> hidden = {20, 15, 10};
  int epochs = 200;
  double validation_fraction = 0.2;
  int patience = 20;
  int batch_size = 128;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  void validate() const {
    for (int w : hidden) {
      if (w < 1) throw ArgumentError("hidden widths must be positive");
    }
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ArgumentError("validation fraction must lie in (0,1)");
    }
    if (patience < 1) throw ArgumentError("patience must be >= 1");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0,1)");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_deviance = 0.0;       // mean per observation
  double validation_deviance = 0.0;  // mean per observation
};

struct FitResult {
  std::shared_ptr<const MlpModel> model;  // best validation weights
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_validation_deviance = 0.0;
  double constant_validation_deviance = 0.0;  // predicting mean(y_train)
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> validation_rows;
};

namespace detail {

struct NetworkParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Vector readout;
  double readout_bias = 0.0;

  NetworkParams zeros_like() const {
    NetworkParams z;
    for (const auto& w : weights) z.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) z.biases.push_back(Vector::Zero(b.size()));
    z.readout = Vector::Zero(readout.size());
    return z;
  }

  MlpModel to_model(int input_dim) const {
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      layers.push_back({weights[k], biases[k], Activation::kTanh});
    }
    return MlpModel(input_dim, std::move(layers), readout_bias, readout);
  }
};

inline double unit_deviance(double y, double theta) {
  const double mu = std::clamp(sigmoid(theta), 1e-12, 1.0 - 1e-12);
  return -2.0 * (y * std::log(mu) + (1.0 - y) * std::log(1.0 - mu));
}

// Forward pass over a column batch; returns the canonical values.
inline Eigen::RowVectorXd forward(const NetworkParams& p, const Matrix& input,
                                  std::vector<Matrix>* activations) {
  Matrix a = input;
  if (activations) activations->assign(1, a);
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    Matrix pre = p.weights[k] * a;
    pre.colwise() += p.biases[k];
    a = pre.array().tanh().matrix();
    if (activations) activations->push_back(a);
  }
  Eigen::RowVectorXd theta = p.readout.transpose() * a;
  theta.array() += p.readout_bias;
  return theta;
}

inline double mean_deviance(const NetworkParams& p, const RowMatrix& x, const Vector& y,
                            const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  constexpr std::size_t kChunk = 1024;
  for (std::size_t s = 0; s < rows.size(); s += kChunk) {
    const std::size_t e = std::min(rows.size(), s + kChunk);
    Matrix input(x.cols(), static_cast<Eigen::Index>(e - s));
    for (std::size_t r = s; r < e; ++r) input.col(static_cast<Eigen::Index>(r - s)) = x.row(rows[r]).transpose();
    const Eigen::RowVectorXd theta = forward(p, input, nullptr);
    for (std::size_t r = s; r < e; ++r) total += unit_deviance(y(rows[r]), theta(static_cast<Eigen::Index>(r - s)));
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace detail

// Mini-batch gradient descent with momentum on the mean Bernoulli deviance,
// early stopping on a held-out split. Deterministic for a given seed.
inline FitResult fit_network(const RowMatrix& x, const Vector& y, const FitConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.size()) throw ShapeError("response length does not match data");
  if (x.rows() < 4) throw ArgumentError("need at least 4 instances to fit");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y(i) >= 0.0 && y(i) <= 1.0)) throw DomainError("responses must lie in [0,1]");
  }
  const int q = static_cast<int>(x.cols());

  FitResult result;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Rng split_rng(stream_seed(cfg.seed, "split"));
  split_rng.shuffle(rows);
  auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(rows.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, rows.size() - 1);
  result.validation_rows.assign(rows.end() - static_cast<std::ptrdiff_t>(n_val), rows.end());
  result.train_rows.assign(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(n_val));
  std::sort(result.validation_rows.begin(), result.validation_rows.end());
  std::sort(result.train_rows.begin(), result.train_rows.end());

  std::vector<int> widths{q};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  const MlpModel init = MlpModel::random(widths, cfg.seed);
  detail::NetworkParams params;
  for (const auto& l : init.layers()) {
    params.weights.push_back(l.weights);
    params.biases.push_back(l.bias);
  }
  params.readout = init.readout_weights();
  double ybar = 0.0;
  for (auto r : result.train_rows) ybar += y(r);
  ybar /= static_cast<double>(result.train_rows.size());
  const double clipped = std::clamp(ybar, 1e-6, 1.0 - 1e-6);
  params.readout_bias = std::log(clipped / (1.0 - clipped));
  {
    double d = 0.0;
    for (auto r : result.validation_rows) d += detail::unit_deviance(y(r), params.readout_bias);
    result.constant_validation_deviance = d / static_cast<double>(result.validation_rows.size());
  }

  detail::NetworkParams velocity = params.zeros_like();
  detail::NetworkParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  Rng batch_rng(stream_seed(cfg.seed, "batches"));
  std::vector<Eigen::Index> order = result.train_rows;
  std::vector<Matrix> acts;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    batch_rng.shuffle(order);
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(cfg.batch_size));
      const auto B = static_cast<Eigen::Index>(e - s);
      Matrix input(q, B);
      Eigen::RowVectorXd target(B);
      for (std::size_t r = s; r < e; ++r) {
        input.col(static_cast<Eigen::Index>(r - s)) = x.row(order[r]).transpose();
        target(static_cast<Eigen::Index>(r - s)) = y(order[r]);
      }
      const Eigen::RowVectorXd theta = detail::forward(params, input, &acts);
      if (!theta.allFinite()) {
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                            ": non-finite network output");
      }
      Eigen::RowVectorXd dtheta(B);
      for (Eigen::Index b = 0; b < B; ++b) {
        dtheta(b) = 2.0 * (sigmoid(theta(b)) - target(b)) / static_cast<double>(B);
      }
      detail::NetworkParams grad = params.zeros_like();
      grad.readout = acts.back() * dtheta.transpose();
      grad.readout_bias = dtheta.sum();
      Matrix delta = params.readout * dtheta;  // d loss / d a_d
      for (std::size_t k = params.weights.size(); k-- > 0;) {
        const Matrix dpre = (delta.array() * (1.0 - acts[k + 1].array().square())).matrix();
        grad.weights[k] = dpre * acts[k].transpose();
        grad.biases[k] = dpre.rowwise().sum();
        if (k > 0) delta = params.weights[k].transpose() * dpre;
      }
      for (std::size_t k = 0; k < params.weights.size(); ++k) {
        velocity.weights[k] = cfg.momentum * velocity.weights[k] - cfg.learning_rate * grad.weights[k];
        velocity.biases[k] = cfg.momentum * velocity.biases[k] - cfg.learning_rate * grad.biases[k];
        params.weights[k] += velocity.weights[k];
        params.biases[k] += velocity.biases[k];
      }
      velocity.readout = cfg.momentum * velocity.readout - cfg.learning_rate * grad.readout;
      velocity.readout_bias = cfg.momentum * velocity.readout_bias - cfg.learning_rate * grad.readout_bias;
      params.readout += velocity.readout;
      params.readout_bias += velocity.readout_bias;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_deviance = detail::mean_deviance(params, x, y, result.train_rows);
    rec.validation_deviance = detail::mean_deviance(params, x, y, result.validation_rows);
    bool finite = std::isfinite(params.readout_bias) && params.readout.allFinite();
    for (std::size_t k = 0; k < params.weights.size(); ++k) {
      finite = finite && params.weights[k].allFinite() && params.biases[k].allFinite();
    }
    if (!finite || !std::isfinite(rec.train_deviance) || !std::isfinite(rec.validation_deviance)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (rec.validation_deviance < best_val) {
      best_val = rec.validation_deviance;
      best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  result.best_validation_deviance = best_val;
  result.model = std::make_shared<MlpModel>(best.to_model(q));
  return result;
}

}  // namespace macq
