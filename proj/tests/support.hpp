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
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "macq/macq.hpp"

namespace macq::testing {

// Central differences with h = 1e-5 (1 + |x_j|).
inline double fd_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

inline Vector fd_gradient(const SmoothModel& m, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x(j));
    Vector up = x, dn = x;
    up(j) += h;
    dn(j) -= h;
    g(j) = (m.canonical(up) - m.canonical(dn)) / (2.0 * h);
  }
  return g;
}

// Columns are central differences of the analytic gradient.
inline Matrix fd_hessian(const SmoothModel& m, const Vector& x) {
  Matrix H(x.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x(j));
    Vector up = x, dn = x;
    up(j) += h;
    dn(j) -= h;
    H.col(j) = (gradient(m, up) - gradient(m, dn)) / (2.0 * h);
  }
  return H;
}

inline double relative_error(const Matrix& got, const Matrix& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

// A (20,15,10) tanh network with non-zero biases so curvature terms are
// exercised at the origin too.
inline std::shared_ptr<const MlpModel> bench_network(int q, std::uint64_t seed) {
  const MlpModel base = MlpModel::random({q, 20, 15, 10}, seed);
  std::vector<DenseLayer> layers = base.layers();
  Rng rng(stream_seed(seed, "bias"));
  for (auto& layer : layers) {
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-0.5, 0.5);
  }
  return std::make_shared<MlpModel>(q, layers, 0.3, base.readout_weights());
}

inline Vector random_point(Rng& rng, Eigen::Index q, double scale = 1.0) {
  Vector x(q);
  for (Eigen::Index j = 0; j < q; ++j) x(j) = scale * rng.normal();
  return x;
}

inline ModelPtr tanh1() {
  return std::make_shared<AnalyticModel>(
      "tanh", 1, [](const Vector& x) { return std::tanh(x(0)); },
      [](const Vector& x) {
        const double t = std::tanh(x(0));
        return Vector::Constant(1, 1.0 - t * t);
      },
      [](const Vector& x) {
        const double t = std::tanh(x(0));
        return Matrix::Constant(1, 1, -2.0 * t * (1.0 - t * t));
      });
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("macq-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

#ifdef MACQ_CLI_PATH
// Runs the CLI with the given argument string; returns its exit status.
inline int run_cli(const std::string& args, const std::filesystem::path& log = {}) {
  std::string cmd = std::string("\"") + MACQ_CLI_PATH + "\" " + args;
  cmd += log.empty() ? " > /dev/null 2>&1" : " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace macq::testing
