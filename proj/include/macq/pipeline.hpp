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
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "macq/baselines.hpp"
#include "macq/dataset.hpp"
#include "macq/engine.hpp"
#include "macq/mlp.hpp"
#include "macq/model_io.hpp"
#include "macq/reference.hpp"
#include "macq/report.hpp"

namespace macq {

struct AnalyzeOptions {
  EngineConfig engine;
  bool refopt = true;
  DescentConfig descent;
  bool individual = false;  // include per-instance contributions
  int permutation_repetitions = 5;
  int profile_points = 20;
  std::uint64_t seed = 1;
};

// Picks the bike-sharing loader when the header carries its response columns,
// otherwise a generic table with a "y" column.
inline Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ArgumentError("data file not found: " + path.string());
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  for (const auto& cell : split_csv_line(first)) {
    if (cell == "casual") return load_bike_csv(path);
  }
  return load_table_csv(path);
}

// Attribution plus (optionally) the reference search for one engine.
inline Json analysis_section(const AttributionEngine& engine, const AnalyzeOptions& opt,
                             const std::vector<std::string>& names, Vector* reference = nullptr) {
  Json out;
  Vector a = Vector::Zero(engine.dim());
  if (opt.refopt) {
    const ReferenceObjective objective(engine);
    const ReferenceSearchState st = optimize_reference(objective, a, opt.descent);
    a = st.best_a;
    out["reference_search"] = search_to_json(st);
  }
  const AttributionReport r = engine.analyze(a);
  out["attribution"] = attribution_to_json(r, names);
  if (reference) *reference = a;
  return out;
}

inline std::vector<double> profile_points(const RowMatrix& x, int j, int count) {
  std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
  std::vector<double> pts;
  for (int i = 0; i < count; ++i) {
    const double alpha = (i + 0.5) / count;
    const double v = empirical_quantile(col, alpha);
    if (pts.empty() || v > pts.back()) pts.push_back(v);
  }
  return pts;
}

inline Json analyze_document(ModelPtr model, const Dataset& data, const AnalyzeOptions& opt,
                             Json provenance = Json::object()) {
  const AttributionEngine engine(model, data.standardized, opt.engine);
  Json doc;
  doc["schema_version"] = kReportSchema;
  provenance["model"] = model->describe();
  provenance["seed"] = opt.seed;
  provenance["config"] = {{"levels", engine.grid().levels.size()},
                          {"level_first", opt.engine.levels.front()},
                          {"level_last", opt.engine.levels.back()},
                          {"bandwidth", opt.engine.smoother.bandwidth_fraction},
                          {"degree", opt.engine.smoother.degree},
                          {"screening_threshold", opt.engine.screening_threshold},
                          {"refopt", opt.refopt},
                          {"refopt_steps", opt.descent.steps},
                          {"refopt_rate", opt.descent.rate}};
  provenance["n"] = data.size();
  doc["provenance"] = provenance;
  doc["feature_names"] = data.feature_names;

  Vector a;
  Json section = analysis_section(engine, opt, data.feature_names, &a);
  doc["attribution"] = section["attribution"];
  if (section.contains("reference_search")) doc["reference_search"] = section["reference_search"];
  doc["reference_original_units"] = vector_to_json(data.standardization.invert_point(a));

  std::vector<int> features;
  for (int j = 0; j < engine.dim(); ++j) features.push_back(j);
  doc["individual"] = individual_to_json(engine.individual(a, features), opt.individual);

  Json baselines;
  Json ale = Json::array(), pdp = Json::array();
  for (int j = 0; j < engine.dim(); ++j) {
    AleConfig cfg;
    cfg.bins = std::min<int>(40, std::max<int>(2, static_cast<int>(data.size() / 2)));
    ale.push_back(profile_to_json(ale_profile(*model, data.standardized, j, cfg)));
    pdp.push_back(profile_to_json(
        pdp_profile(*model, data.standardized, j, profile_points(data.standardized, j, opt.profile_points))));
  }
  baselines["ale"] = ale;
  baselines["pdp"] = pdp;
  if (data.y.size() == data.size() && opt.permutation_repetitions > 0) {
    baselines["permutation_importance"] = importance_to_json(permutation_importance(
        *model, data.standardized, data.y, opt.permutation_repetitions, opt.seed));
  }
  doc["baselines"] = baselines;
  return doc;
}

// One sub-report per layer k: the representation at layer k is the input and
// the remaining network is the model. Each k gets its own reference search.
inline Json layers_document(const std::shared_ptr<const MlpModel>& model, const Dataset& data,
                            const std::vector<int>& ks, const AnalyzeOptions& opt,
                            Json provenance = Json::object()) {
  Json doc;
  doc["schema_version"] = kReportSchema;
  provenance["model"] = model->describe();
  provenance["seed"] = opt.seed;
  provenance["n"] = data.size();
  doc["provenance"] = provenance;
  doc["feature_names"] = data.feature_names;
  Json layers = Json::object();
  for (int k : ks) {
    const TruncatedModel t = truncate_at_layer(model, k);
    std::vector<std::string> names;
    if (k == 0) {
      names = data.feature_names;
    } else {
      for (int i = 0; i < t.representation_dim(); ++i) {
        names.push_back("h" + std::to_string(k) + "_" + std::to_string(i + 1));
      }
    }
    const RowMatrix z = k == 0 ? data.standardized : t.representations(data.standardized);
    const AttributionEngine engine(t.remaining, z, opt.engine);
    Json section = analysis_section(engine, opt, names);
    section["feature_names"] = names;
    double area = 0.0;
    const Json& att = section["attribution"];
    const auto c2 = att.at("C2").get<std::vector<double>>();
    const auto c22 = att.at("C22").get<std::vector<double>>();
    for (std::size_t l = 0; l < c2.size(); ++l) area += std::abs(c22[l] - c2[l]);
    section["interaction_area"] = area;
    layers[std::to_string(k)] = section;
  }
  doc["layers"] = layers;
  return doc;
}

// Re-validates every attribution payload in a report document.
inline void validate_document(const Json& doc) {
  if (doc.value("schema_version", std::string()) != kReportSchema) {
    throw SchemaError("unsupported report schema");
  }
  if (doc.contains("attribution")) validate_attribution(attribution_from_json(doc.at("attribution")));
  if (doc.contains("layers")) {
    for (const auto& [k, section] : doc.at("layers").items()) {
      validate_attribution(attribution_from_json(section.at("attribution")));
    }
  }
}

}  // namespace macq
