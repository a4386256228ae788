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
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace macq::svg {

inline std::string num(double v) {
  if (!std::isfinite(v)) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
      "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  return colors;
}

inline std::string color(std::size_t i) { return palette()[i % palette().size()]; }

// Diverging blue-white-red map for t in [-1, 1].
inline std::string diverging(double t) {
  t = std::clamp(t, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (t < 0) {
    r = static_cast<int>(std::lround(255 * (1 + t)));
    g = static_cast<int>(std::lround(255 * (1 + 0.5 * t)));
  } else {
    g = static_cast<int>(std::lround(255 * (1 - 0.8 * t)));
    b = static_cast<int>(std::lround(255 * (1 - t)));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void include(double v) {
    if (!std::isfinite(v)) return;
    if (empty_) {
      lo = hi = v;
      empty_ = false;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  template <class C>
  void include_all(const C& values) {
    for (double v : values) include(v);
  }
  Range padded(double frac = 0.05) const {
    Range r = *this;
    double span = hi - lo;
    if (span <= 0) span = std::max(1.0, std::abs(lo));
    r.lo = lo - frac * span;
    r.hi = hi + frac * span;
    r.empty_ = false;
    return r;
  }

 private:
  bool empty_ = true;
};

// Nice tick positions covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi, int target = 5) {
  std::vector<double> out;
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

class Document {
 public:
  Document(double width, double height, std::string title)
      : width_(width), height_(height) {
    body_ << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\" "
          << "font-size=\"14\">" << escape(title) << "</text>\n";
  }

  std::ostringstream& raw() { return body_; }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, const std::string& dash = "") {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
          << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << num(width) << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << "/>\n";
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& stroke, double width = 1.5, const std::string& dash = "") {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
          << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) body_ << ' ';
      body_ << num(xs[i]) << ',' << num(ys[i]);
    }
    body_ << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& fill, double opacity = 1.0) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r)
          << "\" fill=\"" << fill << "\"";
    if (opacity < 1.0) body_ << " fill-opacity=\"" << num(opacity) << "\"";
    body_ << "/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    if (h < 0) {
      y += h;
      h = -h;
    }
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
          << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, const std::string& anchor = "start",
            double size = 11, double rotate = 0) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
          << "\" text-anchor=\"" << anchor << "\"";
    if (rotate != 0) body_ << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
    body_ << ">" << escape(s) << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width_)
        << "\" height=\"" << num(height_) << "\" viewBox=\"0 0 " << num(width_) << ' '
        << num(height_) << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

// A rectangular plotting area with linear data-to-pixel mapping.
class Panel {
 public:
  Panel(Document& doc, double x, double y, double w, double h, Range xr, Range yr)
      : doc_(doc), x_(x), y_(y), w_(w), h_(h), xr_(xr), yr_(yr) {}

  double px(double v) const { return x_ + (v - xr_.lo) / (xr_.hi - xr_.lo) * w_; }
  double py(double v) const { return y_ + h_ - (v - yr_.lo) / (yr_.hi - yr_.lo) * h_; }

  void axes(const std::string& xlabel, const std::string& ylabel, bool xticks = true) {
    doc_.rect(x_, y_, w_, h_, "none", "#333333");
    if (xticks) {
      for (double t : ticks(xr_.lo, xr_.hi)) {
        doc_.line(px(t), y_ + h_, px(t), y_ + h_ + 4, "#333333");
        doc_.text(px(t), y_ + h_ + 15, tick_label(t), "middle", 9);
      }
    }
    for (double t : ticks(yr_.lo, yr_.hi)) {
      doc_.line(x_ - 4, py(t), x_, py(t), "#333333");
      doc_.line(x_, py(t), x_ + w_, py(t), "#eeeeee", 0.5);
      doc_.text(x_ - 6, py(t) + 3, tick_label(t), "end", 9);
    }
    if (yr_.lo < 0 && yr_.hi > 0) doc_.line(x_, py(0), x_ + w_, py(0), "#999999", 0.8);
    if (!xlabel.empty()) doc_.text(x_ + w_ / 2, y_ + h_ + 30, xlabel, "middle");
    if (!ylabel.empty()) doc_.text(x_ - 38, y_ + h_ / 2, ylabel, "middle", 11, -90);
  }

  void curve(const std::vector<double>& xs, const std::vector<double>& ys,
             const std::string& stroke, double width = 1.5, const std::string& dash = "") {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      a.push_back(px(xs[i]));
      b.push_back(py(ys[i]));
    }
    doc_.polyline(a, b, stroke, width, dash);
  }

  void points(const std::vector<double>& xs, const std::vector<double>& ys,
              const std::string& fill, double r = 2.0, double opacity = 1.0) {
    for (std::size_t i = 0; i < xs.size(); ++i) doc_.circle(px(xs[i]), py(ys[i]), r, fill, opacity);
  }

  void bar(double x0, double x1, double v, const std::string& fill) {
    doc_.rect(px(x0), py(0.0), px(x1) - px(x0), py(v) - py(0.0), fill);
  }

  void legend(const std::vector<std::string>& labels, const std::vector<std::string>& colors) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double ly = y_ + 12 + 14 * static_cast<double>(i);
      doc_.line(x_ + 8, ly - 4, x_ + 24, ly - 4, colors[i], 2.5);
      doc_.text(x_ + 28, ly, labels[i], "start", 10);
    }
  }

  Document& doc() { return doc_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }

 private:
  Document& doc_;
  double x_, y_, w_, h_;
  Range xr_, yr_;
};

}  // namespace macq::svg
