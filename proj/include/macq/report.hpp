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
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macq/baselines.hpp"
#include "macq/engine.hpp"
#include "macq/error.hpp"
#include "macq/model_io.hpp"
#include "macq/reference.hpp"

namespace macq {

inline constexpr const char* kReportSchema = "macq.report/1";

using Json = nlohmann::json;

// FNV-1a over raw bytes; used to fingerprint input files in reports.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a_hex(bytes);
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Matrix json_to_matrix(const Json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + " must be an array of rows");
  if (j.empty()) return Matrix();
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = json_to_vector(j[r], what);
    if (static_cast<std::size_t>(row.size()) != cols) throw SchemaError(what + " rows differ in length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline Json attribution_to_json(const AttributionReport& r,
                                const std::vector<std::string>& feature_names = {}) {
  Json j;
  j["levels"] = r.levels;
  j["quantiles"] = vector_to_json(r.quantiles);
  j["reference"] = {{"a", vector_to_json(r.reference)}, {"theta_a", r.reference_value}};
  j["S"] = matrix_to_json(r.S);
  Json t = Json::array();
  for (const auto& block : r.T) t.push_back(matrix_to_json(block));
  j["T"] = t;
  j["V"] = matrix_to_json(r.V);
  j["C1"] = vector_to_json(r.C1);
  j["C2"] = vector_to_json(r.C2);
  j["C22"] = vector_to_json(r.C22);
  j["residuals"] = {{"first_order", vector_to_json(r.residuals_first_order)},
                    {"second_order", vector_to_json(r.residuals_second_order)}};
  Json pairs = Json::array();
  for (const auto& p : r.interactions) {
    Json e = {{"j", p.j}, {"k", p.k}, {"max_abs", p.max_abs}};
    if (static_cast<std::size_t>(std::max(p.j, p.k)) < feature_names.size()) {
      e["names"] = {feature_names[static_cast<std::size_t>(p.j)],
                    feature_names[static_cast<std::size_t>(p.k)]};
    }
    pairs.push_back(e);
  }
  j["screening"] = {{"threshold", r.screening_threshold}, {"pairs", pairs}};
  return j;
}

inline AttributionReport attribution_from_json(const Json& j) {
  try {
    AttributionReport r;
    r.levels = j.at("levels").get<std::vector<double>>();
    r.quantiles = json_to_vector(j.at("quantiles"), "quantiles");
    r.reference = json_to_vector(j.at("reference").at("a"), "reference.a");
    r.reference_value = j.at("reference").at("theta_a").get<double>();
    r.S = json_to_matrix(j.at("S"), "S");
    for (const auto& block : j.at("T")) r.T.push_back(json_to_matrix(block, "T"));
    r.V = json_to_matrix(j.at("V"), "V");
    r.C1 = json_to_vector(j.at("C1"), "C1");
    r.C2 = json_to_vector(j.at("C2"), "C2");
    r.C22 = json_to_vector(j.at("C22"), "C22");
    r.residuals_first_order = json_to_vector(j.at("residuals").at("first_order"), "residuals");
    r.residuals_second_order = json_to_vector(j.at("residuals").at("second_order"), "residuals");
    r.screening_threshold = j.at("screening").at("threshold").get<double>();
    for (const auto& p : j.at("screening").at("pairs")) {
      r.interactions.push_back({p.at("j").get<int>(), p.at("k").get<int>(),
                                p.at("max_abs").get<double>()});
    }
    return r;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("malformed attribution report: ") + e.what());
  }
}

// Re-checks the identities tying S, T, V and the contribution curves
// together. Throws SchemaError describing the first violation.
inline void validate_attribution(const AttributionReport& r, double tol = 1e-10) {
  const auto L = static_cast<Eigen::Index>(r.levels.size());
  const Eigen::Index q = r.reference.size();
  auto fail = [](const std::string& what) { throw SchemaError("report inconsistent: " + what); };
  if (r.quantiles.size() != L || r.S.rows() != L || r.V.rows() != L ||
      static_cast<Eigen::Index>(r.T.size()) != L || r.C1.size() != L || r.C2.size() != L ||
      r.C22.size() != L || r.residuals_first_order.size() != L ||
      r.residuals_second_order.size() != L) {
    fail("per-level arrays disagree on the grid length");
  }
  if (r.S.cols() != q || r.V.cols() != q) fail("S/V width differs from reference dimension");
  for (Eigen::Index l = 0; l < L; ++l) {
    const Matrix& t = r.T[static_cast<std::size_t>(l)];
    if (t.rows() != q || t.cols() != q) fail("T block shape");
    const double scale = 1.0 + t.cwiseAbs().maxCoeff() + r.S.row(l).cwiseAbs().sum() +
                         std::abs(r.reference_value);
    if ((t - t.transpose()).cwiseAbs().maxCoeff() > tol * scale) fail("T not symmetric");
    double off = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      for (Eigen::Index k = j + 1; k < q; ++k) off += t(j, k);
    }
    const double c1 = r.reference_value + r.S.row(l).sum();
    const double c2 = c1 - 0.5 * t.diagonal().sum();
    const double c22 = c2 - off;
    if (std::abs(c1 - r.C1(l)) > tol * scale) fail("C1 identity at level " + std::to_string(l));
    if (std::abs(c2 - r.C2(l)) > tol * scale) fail("C2 identity at level " + std::to_string(l));
    if (std::abs(c22 - r.C22(l)) > tol * scale) fail("C22 identity at level " + std::to_string(l));
    if (std::abs(r.reference_value + r.V.row(l).sum() - r.C22(l)) > tol * scale) {
      fail("allocated attributions do not sum to C22 at level " + std::to_string(l));
    }
    if (std::abs(std::abs(r.quantiles(l) - r.C1(l)) - r.residuals_first_order(l)) > tol * scale ||
        std::abs(std::abs(r.quantiles(l) - r.C22(l)) - r.residuals_second_order(l)) > tol * scale) {
      fail("residuals at level " + std::to_string(l));
    }
  }
}

inline Json search_to_json(const ReferenceSearchState& st) {
  Json snaps = Json::array();
  for (const auto& s : st.snapshots) snaps.push_back({{"iteration", s.iteration}, {"a", vector_to_json(s.a)}});
  return {{"iterations", st.iteration},
          {"objective", st.objective},
          {"gradient_norm", st.gradient_norm},
          {"best_objective", st.best_objective},
          {"best_a", vector_to_json(st.best_a)},
          {"best_value", st.best_value},
          {"final_a", vector_to_json(st.a)},
          {"stop_reason", st.stop_reason},
          {"aborted", st.aborted},
          {"rate", st.config.rate},
          {"backtracking", st.config.backtracking},
          {"snapshots", snaps}};
}

inline Json individual_to_json(const IndividualContributions& ic, bool with_instances) {
  Json j = {{"features", ic.features},
            {"band_mean", matrix_to_json(ic.band_mean)},
            {"band_sd", matrix_to_json(ic.band_sd)}};
  if (with_instances) {
    j["rank"] = vector_to_json(ic.ranks);
    j["mean_response"] = vector_to_json(ic.mean_response);
    j["omega"] = matrix_to_json(ic.omega);
    j["x"] = matrix_to_json(ic.feature_values);
  }
  return j;
}

inline Json profile_to_json(const ProfileCurve& c) {
  Json j = {{"feature", c.feature}, {"method", c.method}, {"points", c.points},
            {"values", c.values}};
  if (c.method == "ale") j["anchor"] = c.anchor;
  if (c.instance >= 0) j["instance"] = c.instance;
  if (!c.warnings.empty()) j["warnings"] = c.warnings;
  return j;
}

inline Json importance_to_json(const PermutationImportance& p) {
  return {{"base_deviance", p.base_deviance}, {"increase", p.increase},
          {"repetitions", p.repetitions}, {"seed", p.seed}};
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ArgumentError("file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace macq
