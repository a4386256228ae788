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
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macq/dataset.hpp"
#include "macq/error.hpp"
#include "macq/svg.hpp"

namespace macq {

struct Series {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string str() const {
    std::ostringstream out;
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
    return out.str();
  }
};

struct Figure {
  std::string svg;
  Series series;
};

inline const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names = {
      "contributions",      "attribution-heatmap", "vertical-slices", "individual-scatter",
      "interaction-curves", "refopt-trace",        "perm-importance", "feature-vs-omega"};
  return names;
}

namespace plot_detail {

using nlohmann::json;

inline std::string fmt(double v) { return format_number(v); }

inline std::vector<double> vec(const json& j) { return j.get<std::vector<double>>(); }

inline std::vector<std::vector<double>> mat(const json& j) {
  return j.get<std::vector<std::vector<double>>>();
}

inline const json& require(const json& doc, const char* key, const std::string& hint) {
  if (!doc.contains(key)) throw ArgumentError(std::string("report has no '") + key + "' section; " + hint);
  return doc.at(key);
}

inline std::vector<std::string> feature_names(const json& doc, std::size_t q) {
  std::vector<std::string> names;
  if (doc.contains("feature_names")) names = doc.at("feature_names").get<std::vector<std::string>>();
  for (std::size_t j = names.size(); j < q; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

inline std::vector<double> percent(const std::vector<double>& levels) {
  std::vector<double> out;
  for (double a : levels) out.push_back(100.0 * a);
  return out;
}

constexpr double kW = 720, kH = 440, kLeft = 70, kTop = 40, kPw = 600, kPh = 330;

inline Figure contributions(const json& doc) {
  const json& a = require(doc, "attribution", "run analyze first");
  const auto levels = vec(a.at("levels"));
  const auto q = vec(a.at("quantiles"));
  const auto c1 = vec(a.at("C1")), c2 = vec(a.at("C2")), c22 = vec(a.at("C22"));
  Figure f;
  f.series.header = {"level", "quantile", "C1", "C2", "C22"};
  for (std::size_t l = 0; l < levels.size(); ++l) {
    f.series.add({fmt(levels[l]), fmt(q[l]), fmt(c1[l]), fmt(c2[l]), fmt(c22[l])});
  }
  svg::Range xr, yr;
  xr.include_all(percent(levels));
  yr.include_all(q);
  yr.include_all(c1);
  yr.include_all(c2);
  yr.include_all(c22);
  svg::Document d(kW, kH, "Contributions on the canonical scale");
  svg::Panel p(d, kLeft, kTop, kPw, kPh, xr.padded(0.02), yr.padded());
  p.axes("quantile level (%)", "theta");
  const auto x = percent(levels);
  p.points(x, q, "#000000", 1.8);
  p.curve(x, c1, svg::color(0));
  p.curve(x, c2, svg::color(1));
  p.curve(x, c22, svg::color(2), 1.5, "5,3");
  p.legend({"empirical quantile", "C1", "C2", "C22"}, {"#000000", svg::color(0), svg::color(1), svg::color(2)});
  f.svg = d.str();
  return f;
}

inline Figure heatmap(const json& doc) {
  const json& a = require(doc, "attribution", "run analyze first");
  const auto levels = vec(a.at("levels"));
  const auto S = mat(a.at("S"));
  const std::size_t q = S.empty() ? 0 : S[0].size();
  const auto names = feature_names(doc, q);
  Figure f;
  f.series.header = {"level"};
  for (std::size_t j = 0; j < q; ++j) f.series.header.push_back(names[j]);
  double vmax = 0.0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<std::string> row = {fmt(levels[l])};
    for (double v : S[l]) {
      row.push_back(fmt(v));
      vmax = std::max(vmax, std::abs(v));
    }
    f.series.add(row);
  }
  if (vmax == 0.0) vmax = 1.0;
  const double left = 110, cellw = kPw / std::max<double>(1.0, static_cast<double>(levels.size()));
  const double cellh = std::min(30.0, kPh / std::max<double>(1.0, static_cast<double>(q)));
  svg::Document d(kW + 40, kTop + cellh * static_cast<double>(q) + 70, "First-order attributions S_j by quantile level");
  for (std::size_t j = 0; j < q; ++j) {
    const double y = kTop + cellh * static_cast<double>(j);
    d.text(left - 6, y + cellh / 2 + 4, names[j], "end", 10);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      d.rect(left + cellw * static_cast<double>(l), y, cellw + 0.3, cellh, svg::diverging(S[l][j] / vmax));
    }
  }
  const double base = kTop + cellh * static_cast<double>(q);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double pct = 100.0 * levels[l];
    if (std::abs(pct - std::round(pct / 10) * 10) < 1e-9 || levels.size() <= 10) {
      d.text(left + cellw * (static_cast<double>(l) + 0.5), base + 14, svg::tick_label(pct), "middle", 9);
    }
  }
  d.text(left + kPw / 2, base + 32, "quantile level (%)", "middle");
  d.text(left + kPw + 10, kTop + 10, "max |S| = " + svg::tick_label(vmax), "start", 9);
  f.svg = d.str();
  return f;
}

inline Figure slices(const json& doc) {
  const json& a = require(doc, "attribution", "run analyze first");
  const auto levels = vec(a.at("levels"));
  const auto S = mat(a.at("S"));
  const auto V = mat(a.at("V"));
  const std::size_t q = S.empty() ? 0 : S[0].size();
  const auto names = feature_names(doc, q);
  std::vector<std::size_t> picked;
  for (double target : {0.2, 0.4, 0.6, 0.8}) {
    std::size_t best = 0;
    for (std::size_t l = 1; l < levels.size(); ++l) {
      if (std::abs(levels[l] - target) < std::abs(levels[best] - target)) best = l;
    }
    if (!levels.empty() && std::find(picked.begin(), picked.end(), best) == picked.end()) picked.push_back(best);
  }
  Figure f;
  f.series.header = {"level", "feature", "S", "V"};
  svg::Range yr;
  yr.include(0.0);
  for (std::size_t l : picked) {
    for (std::size_t j = 0; j < q; ++j) {
      f.series.add({fmt(levels[l]), names[j], fmt(S[l][j]), fmt(V[l][j])});
      yr.include(S[l][j]);
    }
  }
  svg::Document d(kW, kH, "First-order attributions at selected quantile levels");
  svg::Range xr;
  xr.lo = 0;
  xr.hi = static_cast<double>(std::max<std::size_t>(q, 1));
  svg::Panel p(d, kLeft, kTop, kPw, kPh - 40, xr, yr.padded());
  p.axes("", "S_j", false);
  const double group = 0.8 / static_cast<double>(std::max<std::size_t>(picked.size(), 1));
  std::vector<std::string> labels, colors;
  for (std::size_t g = 0; g < picked.size(); ++g) {
    for (std::size_t j = 0; j < q; ++j) {
      const double x0 = static_cast<double>(j) + 0.1 + group * static_cast<double>(g);
      p.bar(x0, x0 + group, S[picked[g]][j], svg::color(g));
    }
    labels.push_back("alpha = " + svg::tick_label(100.0 * levels[picked[g]]) + "%");
    colors.push_back(svg::color(g));
  }
  for (std::size_t j = 0; j < q; ++j) {
    d.text(p.px(static_cast<double>(j) + 0.5), kTop + kPh - 40 + 12, names[j], "end", 9, -45);
  }
  p.legend(labels, colors);
  f.svg = d.str();
  return f;
}

inline void require_instances(const json& doc) {
  const json& ind = require(doc, "individual", "rerun analyze with --individual");
  if (!ind.contains("omega")) {
    throw ArgumentError("report has no per-instance contributions; rerun analyze with --individual");
  }
}

inline Figure individual_scatter(const json& doc) {
  require_instances(doc);
  const json& ind = doc.at("individual");
  const auto feats = ind.at("features").get<std::vector<int>>();
  const auto rank = vec(ind.at("rank"));
  const auto omega = mat(ind.at("omega"));
  const auto bm = mat(ind.at("band_mean"));
  const auto bs = mat(ind.at("band_sd"));
  const auto levels = vec(doc.at("attribution").at("levels"));
  const auto names = feature_names(doc, feats.empty() ? 0 : static_cast<std::size_t>(*std::max_element(feats.begin(), feats.end())) + 1);
  Figure f;
  f.series.header = {"rank", "feature", "omega"};
  svg::Range yr, xr;
  xr.lo = 0;
  xr.hi = 100;
  for (std::size_t i = 0; i < rank.size(); ++i) {
    for (std::size_t c = 0; c < feats.size(); ++c) {
      f.series.add({fmt(rank[i]), names[static_cast<std::size_t>(feats[c])], fmt(omega[i][c])});
      yr.include(omega[i][c]);
    }
  }
  svg::Document d(kW, kH, "Individual contributions x_j * d theta / d x_j");
  svg::Panel p(d, kLeft, kTop, kPw, kPh, xr, yr.padded());
  p.axes("rank of theta (%)", "contribution");
  std::vector<std::string> labels, colors;
  const auto x = percent(levels);
  for (std::size_t c = 0; c < feats.size(); ++c) {
    std::vector<double> xs, ys, up, lo, mid;
    for (std::size_t i = 0; i < rank.size(); ++i) {
      xs.push_back(100.0 * rank[i]);
      ys.push_back(omega[i][c]);
    }
    p.points(xs, ys, svg::color(c), 1.2, 0.35);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      mid.push_back(bm[l][c]);
      up.push_back(bm[l][c] + bs[l][c]);
      lo.push_back(bm[l][c] - bs[l][c]);
    }
    p.curve(x, mid, svg::color(c), 2.0);
    p.curve(x, up, svg::color(c), 1.0, "3,2");
    p.curve(x, lo, svg::color(c), 1.0, "3,2");
    labels.push_back(names[static_cast<std::size_t>(feats[c])]);
    colors.push_back(svg::color(c));
  }
  p.legend(labels, colors);
  f.svg = d.str();
  return f;
}

inline Figure interactions(const json& doc) {
  const json& a = require(doc, "attribution", "run analyze first");
  const auto levels = vec(a.at("levels"));
  const json& T = a.at("T");
  const std::size_t q = T.empty() ? 0 : T[0].size();
  const auto names = feature_names(doc, q);
  const double threshold = a.at("screening").at("threshold").get<double>();
  struct Pair { int j, k; };
  std::vector<Pair> pairs;
  for (const auto& e : a.at("screening").at("pairs")) {
    if (e.at("max_abs").get<double>() > threshold) pairs.push_back({e.at("j").get<int>(), e.at("k").get<int>()});
  }
  Figure f;
  f.series.header = {"level"};
  for (const auto& pr : pairs) {
    f.series.header.push_back("T_" + names[static_cast<std::size_t>(pr.j)] + "_" + names[static_cast<std::size_t>(pr.k)]);
  }
  std::vector<std::vector<double>> curves(pairs.size());
  svg::Range yr;
  yr.include(0.0);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<std::string> row = {fmt(levels[l])};
    const auto block = mat(T[l]);
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const double v = block[static_cast<std::size_t>(pairs[c].j)][static_cast<std::size_t>(pairs[c].k)];
      curves[c].push_back(v);
      row.push_back(fmt(v));
      yr.include(v);
    }
    f.series.add(row);
  }
  svg::Document d(kW, kH, "Interaction terms above |T| > " + svg::tick_label(threshold));
  svg::Range xr;
  xr.include_all(percent(levels));
  svg::Panel p(d, kLeft, kTop, kPw, kPh, xr.padded(0.02), yr.padded());
  p.axes("quantile level (%)", "T_jk");
  std::vector<std::string> labels, colors;
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    p.curve(percent(levels), curves[c], svg::color(c));
    labels.push_back(f.series.header[c + 1]);
    colors.push_back(svg::color(c));
  }
  if (pairs.empty()) d.text(kLeft + kPw / 2, kTop + kPh / 2, "no pair exceeds the threshold", "middle");
  p.legend(labels, colors);
  f.svg = d.str();
  return f;
}

inline Figure refopt_trace(const json& doc) {
  const json& t = require(doc, "reference_search", "rerun analyze without --no-refopt");
  const auto g = vec(t.at("objective"));
  const auto best = vec(t.at("best_objective"));
  const auto gn = vec(t.at("gradient_norm"));
  Figure f;
  f.series.header = {"iteration", "G", "best_G", "grad_norm"};
  std::vector<double> it;
  svg::Range yr, xr;
  for (std::size_t i = 0; i < g.size(); ++i) {
    it.push_back(static_cast<double>(i));
    f.series.add({std::to_string(i), fmt(g[i]), fmt(best[i]), fmt(gn[i])});
    yr.include(g[i]);
  }
  xr.include_all(it);
  svg::Document d(kW, kH, "Reference point optimisation");
  svg::Panel p(d, kLeft, kTop, kPw, kPh, xr.padded(0.01), yr.padded());
  p.axes("iteration", "G(a)");
  p.curve(it, g, svg::color(0));
  p.curve(it, best, svg::color(1), 1.5, "5,3");
  p.legend({"G", "best seen"}, {svg::color(0), svg::color(1)});
  f.svg = d.str();
  return f;
}

inline Figure perm_importance(const json& doc) {
  const json& b = require(doc, "baselines", "rerun analyze on data with a response column");
  if (!b.contains("permutation_importance")) {
    throw ArgumentError("report has no permutation importance; the data needs a response column");
  }
  const json& pi = b.at("permutation_importance");
  const auto inc = vec(pi.at("increase"));
  const auto names = feature_names(doc, inc.size());
  const double base = pi.at("base_deviance").get<double>();
  std::vector<std::size_t> order(inc.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b2) { return inc[a] > inc[b2]; });
  Figure f;
  f.series.header = {"feature", "increase", "relative"};
  svg::Range xr;
  xr.include(0.0);
  for (std::size_t j : order) {
    f.series.add({names[j], fmt(inc[j]), fmt(base > 0 ? inc[j] / base : 0.0)});
    xr.include(inc[j]);
  }
  const double rowh = 22;
  svg::Document d(kW, kTop + rowh * static_cast<double>(inc.size()) + 60, "Permutation importance (deviance increase)");
  const double left = 130, w = 520;
  const auto xp = xr.padded();
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double y = kTop + rowh * static_cast<double>(r);
    const double x0 = left + (0.0 - xp.lo) / (xp.hi - xp.lo) * w;
    const double x1 = left + (inc[order[r]] - xp.lo) / (xp.hi - xp.lo) * w;
    d.rect(std::min(x0, x1), y + 3, std::abs(x1 - x0), rowh - 6, svg::color(0));
    d.text(left - 6, y + rowh / 2 + 4, names[order[r]], "end", 10);
  }
  const double base_y = kTop + rowh * static_cast<double>(order.size());
  d.line(left, base_y, left + w, base_y, "#333333");
  for (double t : svg::ticks(xp.lo, xp.hi)) {
    const double x = left + (t - xp.lo) / (xp.hi - xp.lo) * w;
    d.line(x, base_y, x, base_y + 4, "#333333");
    d.text(x, base_y + 15, svg::tick_label(t), "middle", 9);
  }
  f.svg = d.str();
  return f;
}

inline Figure feature_vs_omega(const json& doc) {
  require_instances(doc);
  const json& ind = doc.at("individual");
  const auto feats = ind.at("features").get<std::vector<int>>();
  const auto x = mat(ind.at("x"));
  const auto omega = mat(ind.at("omega"));
  const auto names = feature_names(doc, feats.empty() ? 0 : static_cast<std::size_t>(*std::max_element(feats.begin(), feats.end())) + 1);
  Figure f;
  f.series.header = {"instance", "feature", "x", "omega"};
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t c = 0; c < feats.size(); ++c) {
      f.series.add({std::to_string(i), names[static_cast<std::size_t>(feats[c])], fmt(x[i][c]), fmt(omega[i][c])});
    }
  }
  const std::size_t cols = std::min<std::size_t>(3, std::max<std::size_t>(feats.size(), 1));
  const std::size_t rows = (feats.size() + cols - 1) / cols;
  const double pw = 200, ph = 150, gap = 70;
  svg::Document d(40 + (pw + gap) * static_cast<double>(cols), 40 + (ph + gap) * static_cast<double>(std::max<std::size_t>(rows, 1)),
                  "Feature value against individual contribution");
  for (std::size_t c = 0; c < feats.size(); ++c) {
    std::vector<double> xs, ys;
    svg::Range xr, yr;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xs.push_back(x[i][c]);
      ys.push_back(omega[i][c]);
    }
    xr.include_all(xs);
    yr.include_all(ys);
    const double px = 60 + (pw + gap) * static_cast<double>(c % cols);
    const double py = 40 + (ph + gap) * static_cast<double>(c / cols);
    svg::Panel p(d, px, py, pw, ph, xr.padded(), yr.padded());
    p.axes(names[static_cast<std::size_t>(feats[c])], "omega");
    p.points(xs, ys, svg::color(c), 1.2, 0.4);
  }
  f.svg = d.str();
  return f;
}

}  // namespace plot_detail

// Renders one of figure_names() from a report document. Unknown names raise
// ArgumentError listing the valid ones.
inline Figure render_figure(const nlohmann::json& doc, const std::string& name) {
  using namespace plot_detail;
  try {
    if (name == "contributions") return contributions(doc);
    if (name == "attribution-heatmap") return heatmap(doc);
    if (name == "vertical-slices") return slices(doc);
    if (name == "individual-scatter") return individual_scatter(doc);
    if (name == "interaction-curves") return interactions(doc);
    if (name == "refopt-trace") return refopt_trace(doc);
    if (name == "perm-importance") return perm_importance(doc);
    if (name == "feature-vs-omega") return feature_vs_omega(doc);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("report malformed for figure '" + name + "': " + e.what());
  }
  std::string valid;
  for (const auto& n : figure_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ArgumentError("unknown figure '" + name + "'; valid figures: " + valid);
}

}  // namespace macq
