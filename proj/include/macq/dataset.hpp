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

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "macq/error.hpp"
#include "macq/model.hpp"

namespace macq {

// Per-column z-score transform, population (1/n) variance convention.
struct Standardization {
  Vector mean;
  Vector scale;

  Eigen::Index dim() const { return mean.size(); }

  static Standardization identity(Eigen::Index q) {
    return {Vector::Zero(q), Vector::Ones(q)};
  }

  static Standardization fit(const RowMatrix& raw, const std::vector<std::string>& names = {}) {
    if (raw.rows() < 2) throw PreprocessingError("standardization needs at least 2 rows");
    Standardization s{Vector(raw.cols()), Vector(raw.cols())};
    const double n = static_cast<double>(raw.rows());
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double m = raw.col(j).sum() / n;
      const double var = (raw.col(j).array() - m).square().sum() / n;
      const double sd = std::sqrt(var);
      if (!(sd > 0.0) || sd <= 1e-12 * (1.0 + std::abs(m))) {
        const std::string name = j < static_cast<Eigen::Index>(names.size())
                                     ? names[static_cast<std::size_t>(j)]
                                     : "#" + std::to_string(j);
        throw PreprocessingError("column '" + name + "' is constant; cannot standardize");
      }
      s.mean(j) = m;
      s.scale(j) = sd;
    }
    return s;
  }

  void check(Eigen::Index q) const {
    if (q != dim()) {
      throw ShapeError("standardization has " + std::to_string(dim()) +
                       " columns, data has " + std::to_string(q));
    }
  }

  RowMatrix apply(const RowMatrix& raw) const {
    check(raw.cols());
    RowMatrix out(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      out.row(i) = ((raw.row(i).transpose() - mean).array() / scale.array()).matrix().transpose();
    }
    return out;
  }

  RowMatrix invert(const RowMatrix& z) const {
    check(z.cols());
    RowMatrix out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      out.row(i) = (z.row(i).transpose().array() * scale.array() + mean.array()).matrix().transpose();
    }
    return out;
  }

  Vector apply_point(const Vector& raw) const {
    check(raw.size());
    return ((raw - mean).array() / scale.array()).matrix();
  }

  Vector invert_point(const Vector& z) const {
    check(z.size());
    return (z.array() * scale.array() + mean.array()).matrix();
  }
};

struct Dataset {
  std::vector<std::string> feature_names;
  RowMatrix raw;            // original units
  RowMatrix standardized;   // model input units
  Vector y;                 // responses in [0,1]
  Standardization standardization;

  Eigen::Index size() const { return raw.rows(); }
  Eigen::Index dim() const { return raw.cols(); }
};

// Fits the standardization on the raw features and fills `standardized`.
inline Dataset standardize(Dataset d) {
  d.standardization = Standardization::fit(d.raw, d.feature_names);
  d.standardized = d.standardization.apply(d.raw);
  return d;
}

// Uses a previously fitted transform (e.g. the one stored with a model).
inline Dataset standardize_with(Dataset d, Standardization s) {
  d.standardized = s.apply(d.raw);
  d.standardization = std::move(s);
  return d;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based, header is line 1
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  for (auto& s : cells) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t\r");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ArgumentError("data file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError(path.string() + ": empty file");
  return t;
}

inline double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("non-numeric value '" + cell + "' in column '" + column + "' at row " +
                     std::to_string(line));
  }
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Writes a header row plus numeric rows with LF line endings.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Bike-sharing data

// Feature columns in model order. Both the descriptive names and the original
// UCI "hour.csv" abbreviations are accepted.
inline const std::vector<std::string>& bike_feature_names() {
  static const std::vector<std::string> names{
      "year", "month", "hour", "weekday", "holiday", "workingday",
      "weather", "temp", "temp_feel", "humidity", "windspeed"};
  return names;
}

inline const std::map<std::string, std::string>& bike_column_aliases() {
  static const std::map<std::string, std::string> aliases{
      {"yr", "year"},       {"mnth", "month"},      {"hr", "hour"},
      {"weathersit", "weather"}, {"atemp", "temp_feel"}, {"hum", "humidity"},
      {"cnt", "count"},     {"dteday", "date"}};
  return aliases;
}

// Y = casual / count on the eleven calendar and weather features; the date
// column, if present, is ignored.
inline Dataset load_bike_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    std::string name = t.header[c];
    if (auto it = bike_column_aliases().find(name); it != bike_column_aliases().end()) {
      name = it->second;
    }
    index.emplace(name, c);
  }
  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw SchemaError(path.string() + ": missing column '" + name + "'");
    }
    return it->second;
  };
  const auto& features = bike_feature_names();
  std::vector<std::size_t> cols;
  for (const auto& f : features) cols.push_back(column(f));
  const std::size_t casual = column("casual");
  const std::size_t count = column("count");

  Dataset d;
  d.feature_names = features;
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  d.raw.resize(n, static_cast<Eigen::Index>(features.size()));
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const std::size_t line = t.line_numbers[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < cols.size(); ++c) {
      d.raw(i, static_cast<Eigen::Index>(c)) = parse_number(row[cols[c]], line, features[c]);
    }
    const double cas = parse_number(row[casual], line, "casual");
    const double cnt = parse_number(row[count], line, "count");
    if (cnt < 1.0) {
      throw ValidationError(path.string() + ": row " + std::to_string(line) +
                            " has count < 1; the casual share is undefined");
    }
    if (cas < 0.0 || cas > cnt) {
      throw ValidationError(path.string() + ": row " + std::to_string(line) +
                            " has casual outside [0, count]");
    }
    d.y(i) = cas / cnt;
  }
  if (n == 0) throw ValidationError(path.string() + ": no data rows");
  return d;
}

// Generic numeric table: every column except `response` is a feature.
inline Dataset load_table_csv(const std::filesystem::path& path,
                              const std::string& response = "y") {
  const CsvTable t = read_csv(path);
  std::optional<std::size_t> ycol;
  std::vector<std::size_t> cols;
  Dataset d;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == response) {
      ycol = c;
    } else {
      cols.push_back(c);
      d.feature_names.push_back(t.header[c]);
    }
  }
  if (!ycol) throw SchemaError(path.string() + ": missing response column '" + response + "'");
  if (cols.empty()) throw SchemaError(path.string() + ": no feature columns");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  if (n == 0) throw ValidationError(path.string() + ": no data rows");
  d.raw.resize(n, static_cast<Eigen::Index>(cols.size()));
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    const std::size_t line = t.line_numbers[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < cols.size(); ++c) {
      d.raw(i, static_cast<Eigen::Index>(c)) =
          parse_number(row[cols[c]], line, t.header[cols[c]]);
    }
    d.y(i) = parse_number(row[*ycol], line, response);
    if (!(d.y(i) >= 0.0 && d.y(i) <= 1.0)) {
      throw ValidationError(path.string() + ": response outside [0,1] at row " +
                            std::to_string(line));
    }
  }
  return d;
}

inline void write_table_csv(const std::filesystem::path& path, const Dataset& d) {
  std::vector<std::string> header = d.feature_names;
  header.push_back("y");
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    std::vector<double> row(d.raw.row(i).data(), d.raw.row(i).data() + d.dim());
    row.push_back(d.y(i));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace macq
