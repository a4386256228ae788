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
#include <utility>
#include <vector>

#include "macq/error.hpp"
#include "macq/model.hpp"
#include "macq/rng.hpp"

namespace macq {

// Hidden-layer activations. Only C^2 maps are representable; anything else is
// rejected when a model file is parsed.
enum class Activation { kTanh, kIdentity };

inline const char* activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "identity";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity" || name == "linear" || name == "affine") {
    return Activation::kIdentity;
  }
  throw SchemaError("activation '" + name +
                    "' is not twice differentiable; only tanh and affine "
                    "layers are supported");
}

struct DenseLayer {
  Matrix weights;  // q_k x q_{k-1}
  Vector bias;     // q_k
  Activation activation = Activation::kTanh;
};

// Fully connected feed-forward network
//   theta(x) = readout_bias + readout_weights' z^(d) o ... o z^(1) (x),
//   z^(k)(v) = act(W_k v + b_k).
// With no hidden layers it degenerates to an affine map.
class MlpModel final : public SmoothModel {
 public:
  MlpModel(int input_dim, std::vector<DenseLayer> layers, double readout_bias,
           Vector readout_weights)
      : input_dim_(input_dim),
        layers_(std::move(layers)),
        readout_bias_(readout_bias),
        readout_weights_(std::move(readout_weights)) {
    if (input_dim_ < 1) throw ArgumentError("network input dimension must be >= 1");
    Eigen::Index prev = input_dim_;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& layer = layers_[k];
      if (layer.weights.rows() < 1) {
        throw ArgumentError("layer " + std::to_string(k + 1) + " has zero width");
      }
      if (layer.weights.cols() != prev || layer.bias.size() != layer.weights.rows()) {
        throw ShapeError("layer " + std::to_string(k + 1) +
                         " weight/bias shape does not chain with the previous layer");
      }
      if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
        throw DomainError("layer " + std::to_string(k + 1) + " has non-finite parameters");
      }
      prev = layer.weights.rows();
    }
    if (readout_weights_.size() != prev) {
      throw ShapeError("readout weights do not match last hidden width");
    }
    if (!readout_weights_.allFinite() || !std::isfinite(readout_bias_)) {
      throw DomainError("readout has non-finite parameters");
    }
  }

  // Seeded initialisation: weights uniform in +-1/sqrt(fan_in), zero biases.
  static MlpModel random(const std::vector<int>& widths, std::uint64_t seed) {
    if (widths.empty()) throw ArgumentError("architecture needs an input width");
    for (int w : widths) {
      if (w < 1) throw ArgumentError("layer widths must be positive");
    }
    Rng rng(stream_seed(seed, "mlp-init"));
    std::vector<DenseLayer> layers;
    for (std::size_t k = 1; k < widths.size(); ++k) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k - 1]));
      DenseLayer layer;
      layer.weights.resize(widths[k], widths[k - 1]);
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          layer.weights(r, c) = rng.uniform(-bound, bound);
        }
      }
      layer.bias = Vector::Zero(widths[k]);
      layers.push_back(std::move(layer));
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths.back()));
    Vector readout(widths.back());
    for (Eigen::Index i = 0; i < readout.size(); ++i) readout(i) = rng.uniform(-bound, bound);
    return MlpModel(widths.front(), std::move(layers), 0.0, std::move(readout));
  }

  int input_dim() const override { return input_dim_; }
  std::string describe() const override {
    std::string s = "mlp(" + std::to_string(input_dim_);
    for (const auto& l : layers_) s += "," + std::to_string(l.weights.rows());
    return s + ")";
  }

  int depth() const { return static_cast<int>(layers_.size()); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  double readout_bias() const { return readout_bias_; }
  const Vector& readout_weights() const { return readout_weights_; }

  // (q, q_1, ..., q_d)
  std::vector<int> widths() const {
    std::vector<int> w{input_dim_};
    for (const auto& l : layers_) w.push_back(static_cast<int>(l.weights.rows()));
    return w;
  }

  // z^(k:1)(x); k = 0 returns x itself.
  Vector representation(const Vector& x, int k) const {
    check_input(x);
    if (k < 0 || k > depth()) throw ArgumentError("layer index out of range");
    Vector z = x;
    for (int i = 0; i < k; ++i) z = apply(layers_[i], z);
    return z;
  }

  // Jacobian of z^(k:1) with respect to x (q_k x q).
  Matrix representation_jacobian(const Vector& x, int k) const {
    check_input(x);
    if (k < 0 || k > depth()) throw ArgumentError("layer index out of range");
    Matrix jac = Matrix::Identity(input_dim_, input_dim_);
    Vector z = x;
    for (int i = 0; i < k; ++i) {
      const auto& layer = layers_[i];
      const Vector pre = layer.weights * z + layer.bias;
      Matrix next = layer.weights * jac;
      for (Eigen::Index m = 0; m < pre.size(); ++m) {
        next.row(m) *= first_derivative(layer.activation, pre(m));
      }
      jac = std::move(next);
      z = activate(layer.activation, pre);
    }
    return jac;
  }

 protected:
  double evaluate(const Vector& x) const override {
    Vector z = x;
    for (const auto& layer : layers_) z = apply(layer, z);
    return readout_bias_ + readout_weights_.dot(z);
  }

  // Forward sweep keeps pre-activations and their Jacobians d a_k / d x; the
  // backward sweep forms the adjoints delta_k = d theta / d z_k. The Hessian is
  // then sum_k P_k' diag(delta_k * act''(a_k)) P_k because every a_k is affine
  // in the previous layer's output.
  void differentiate(const Vector& x, int order,
                     LocalDerivatives& out) const override {
    const std::size_t d = layers_.size();
    std::vector<Vector> pre(d);
    std::vector<Matrix> pre_jac(order == 2 ? d : 0);
    Vector z = x;
    Matrix jac;  // d z_{k-1} / d x, unused for k = 1
    for (std::size_t k = 0; k < d; ++k) {
      const auto& layer = layers_[k];
      pre[k] = layer.weights * z + layer.bias;
      if (order == 2) {
        pre_jac[k] = (k == 0) ? layer.weights : Matrix(layer.weights * jac);
        jac = pre_jac[k];
        for (Eigen::Index m = 0; m < pre[k].size(); ++m) {
          jac.row(m) *= first_derivative(layer.activation, pre[k](m));
        }
      }
      z = activate(layer.activation, pre[k]);
    }
    out.value = readout_bias_ + readout_weights_.dot(z);

    std::vector<Vector> adjoint(d);
    Vector delta = readout_weights_;
    for (std::size_t k = d; k-- > 0;) {
      adjoint[k] = delta;
      const auto& layer = layers_[k];
      Vector scaled(delta.size());
      for (Eigen::Index m = 0; m < delta.size(); ++m) {
        scaled(m) = delta(m) * first_derivative(layer.activation, pre[k](m));
      }
      delta = layer.weights.transpose() * scaled;
    }
    out.gradient = std::move(delta);

    if (order == 2) {
      Matrix hess = Matrix::Zero(input_dim_, input_dim_);
      for (std::size_t k = 0; k < d; ++k) {
        if (layers_[k].activation == Activation::kIdentity) continue;
        const Vector& a = pre[k];
        Vector curvature(a.size());
        for (Eigen::Index m = 0; m < a.size(); ++m) {
          curvature(m) = adjoint[k](m) * second_derivative(layers_[k].activation, a(m));
        }
        hess.noalias() += pre_jac[k].transpose() * curvature.asDiagonal() * pre_jac[k];
      }
      // exact symmetry; the sum above is symmetric up to rounding
      out.hessian = 0.5 * (hess + hess.transpose());
    }
  }

 private:
  static Vector activate(Activation act, const Vector& pre) {
    if (act == Activation::kIdentity) return pre;
    return pre.array().tanh().matrix();
  }
  static double first_derivative(Activation act, double a) {
    if (act == Activation::kIdentity) return 1.0;
    const double t = std::tanh(a);
    return 1.0 - t * t;
  }
  static double second_derivative(Activation act, double a) {
    if (act == Activation::kIdentity) return 0.0;
    const double t = std::tanh(a);
    return -2.0 * t * (1.0 - t * t);
  }
  static Vector apply(const DenseLayer& layer, const Vector& v) {
    return activate(layer.activation, layer.weights * v + layer.bias);
  }

  int input_dim_;
  std::vector<DenseLayer> layers_;
  double readout_bias_;
  Vector readout_weights_;
};

// The split of a network after hidden layer k: learned representation
// x^(k:1) feeding the remaining sub-network z^(d:k+1) plus readout.
struct TruncatedModel {
  std::shared_ptr<const MlpModel> full;
  int layer = 0;
  std::shared_ptr<const MlpModel> remaining;

  int representation_dim() const { return remaining->input_dim(); }

  Vector representation(const Vector& x) const { return full->representation(x, layer); }

  Matrix representation_jacobian(const Vector& x) const {
    return full->representation_jacobian(x, layer);
  }

  RowMatrix representations(const RowMatrix& x) const {
    RowMatrix out(x.rows(), representation_dim());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out.row(i) = representation(x.row(i).transpose()).transpose();
    }
    return out;
  }

  double canonical(const Vector& x) const { return remaining->canonical(representation(x)); }
};

inline TruncatedModel truncate_at_layer(std::shared_ptr<const MlpModel> model, int k) {
  if (!model) throw ArgumentError("truncate_at_layer needs a model");
  if (k < 0 || k > model->depth()) {
    throw ArgumentError("layer " + std::to_string(k) + " outside [0, " +
                        std::to_string(model->depth()) + "]");
  }
  TruncatedModel t;
  t.full = model;
  t.layer = k;
  if (k == 0) {
    t.remaining = model;
  } else {
    const auto& layers = model->layers();
    std::vector<DenseLayer> tail(layers.begin() + k, layers.end());
    t.remaining = std::make_shared<MlpModel>(
        static_cast<int>(layers[k - 1].weights.rows()), std::move(tail),
        model->readout_bias(), model->readout_weights());
  }
  return t;
}

}  // namespace macq
