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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "macq/dataset.hpp"
#include "macq/error.hpp"
#include "macq/mlp.hpp"

namespace macq {

inline constexpr const char* kModelSchema = "macq.model/1";

// A network together with the feature transform it was fitted under.
struct ModelFile {
  std::shared_ptr<const MlpModel> model;
  Standardization standardization;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
};

inline nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector json_to_vector(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(what + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline nlohmann::json model_to_json(const ModelFile& file) {
  const MlpModel& m = *file.model;
  nlohmann::json j;
  j["schema_version"] = kModelSchema;
  j["arch"] = m.widths();
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  nlohmann::json activations = nlohmann::json::array();
  for (const auto& layer : m.layers()) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) flat.push_back(layer.weights(r, c));
    }
    weights.push_back(flat);
    biases.push_back(vector_to_json(layer.bias));
    activations.push_back(activation_name(layer.activation));
  }
  j["weights"] = weights;
  j["biases"] = biases;
  j["activations"] = activations;
  j["readout"] = {{"bias", m.readout_bias()}, {"weights", vector_to_json(m.readout_weights())}};
  j["standardization"] = {{"mean", vector_to_json(file.standardization.mean)},
                          {"std", vector_to_json(file.standardization.scale)}};
  j["seed"] = file.seed;
  if (!file.feature_names.empty()) j["feature_names"] = file.feature_names;
  return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw SchemaError("model file must be a JSON object");
    if (j.value("schema_version", std::string()) != kModelSchema) {
      throw SchemaError("unsupported model schema_version (expected " +
                        std::string(kModelSchema) + ")");
    }
    const auto arch = j.at("arch").get<std::vector<int>>();
    if (arch.empty()) throw SchemaError("arch must list at least the input width");
    for (int w : arch) {
      if (w < 1) throw SchemaError("arch widths must be positive");
    }
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    const std::size_t depth = arch.size() - 1;
    if (weights.size() != depth || biases.size() != depth) {
      throw SchemaError("weights/biases must have one entry per hidden layer");
    }
    std::vector<std::string> acts(depth, "tanh");
    if (j.contains("activations")) {
      acts = j.at("activations").get<std::vector<std::string>>();
      if (acts.size() != depth) throw SchemaError("activations must match hidden layers");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k < depth; ++k) {
      const Vector flat = json_to_vector(weights[k], "weights[" + std::to_string(k) + "]");
      const int rows = arch[k + 1], cols = arch[k];
      if (flat.size() != static_cast<Eigen::Index>(rows) * cols) {
        throw SchemaError("weights[" + std::to_string(k) + "] must hold " +
                          std::to_string(rows * cols) + " values");
      }
      DenseLayer layer;
      layer.weights.resize(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) layer.weights(r, c) = flat(static_cast<Eigen::Index>(r) * cols + c);
      }
      layer.bias = json_to_vector(biases[k], "biases[" + std::to_string(k) + "]");
      layer.activation = parse_activation(acts[k]);
      layers.push_back(std::move(layer));
    }
    const auto& readout = j.at("readout");
    ModelFile file;
    file.model = std::make_shared<MlpModel>(arch.front(), std::move(layers),
                                            readout.at("bias").get<double>(),
                                            json_to_vector(readout.at("weights"), "readout.weights"));
    if (j.contains("standardization")) {
      const auto& s = j.at("standardization");
      file.standardization = {json_to_vector(s.at("mean"), "standardization.mean"),
                              json_to_vector(s.at("std"), "standardization.std")};
      if (file.standardization.mean.size() != arch.front() ||
          file.standardization.scale.size() != arch.front()) {
        throw SchemaError("standardization must have one entry per input feature");
      }
      if ((file.standardization.scale.array() <= 0.0).any()) {
        throw SchemaError("standardization std entries must be positive");
      }
    } else {
      file.standardization = Standardization::identity(arch.front());
    }
    file.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("feature_names")) {
      file.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    }
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("inconsistent model file: ") + e.what());
  } catch (const ArgumentError& e) {
    throw SchemaError(std::string("inconsistent model file: ") + e.what());
  }
}

inline void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << model_to_json(file).dump(2) << '\n';
  if (!out) throw IoError("failed writing model file " + path.string());
}

inline ModelFile load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ArgumentError("model file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace macq
