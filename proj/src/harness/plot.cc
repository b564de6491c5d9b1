// Copyright 2026 The PrefAlign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prefalign/harness/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "prefalign/error.h"
#include "prefalign/stats.h"

namespace prefalign {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#17becf",
                                    "#8c564b", "#e377c2"};
constexpr double kLeft = 72.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

struct Point {
  double x, median, q25, q75;
};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

// Axis in transformed coordinates (log10 for log axes).
struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;

  double T(double v) const { return log ? std::log10(v) : v; }
  std::vector<double> Ticks() const {
    std::vector<double> ticks;
    if (log) {
      for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) {
        ticks.push_back(e);
      }
      return ticks;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      step = m * mag;
      if (step >= raw) break;
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span;
         t += step) {
      ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    }
    return ticks;
  }
  std::string TickText(double t) const {
    if (log) {
      const int e = static_cast<int>(std::lround(t));
      return "1e" + std::to_string(e);
    }
    return Label(t);
  }
};

Axis MakeAxis(bool log, double lo, double hi) {
  Axis a;
  a.log = log;
  if (log) {
    a.lo = std::floor(std::log10(lo));
    a.hi = std::ceil(std::log10(hi));
    if (a.hi <= a.lo) a.hi = a.lo + 1.0;
  } else {
    const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1.0, std::abs(lo));
    a.lo = lo - pad;
    a.hi = hi + pad;
  }
  return a;
}

}  // namespace

PlotSpec ParsePlotSpec(const nlohmann::json& j) {
  PlotSpec spec;
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, "plot: expected object");
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    const auto& v = item.value();
    try {
      if (k == "x") {
        spec.x_field = v.get<std::string>();
      } else if (k == "y") {
        spec.y_field = v.get<std::string>();
      } else if (k == "series") {
        spec.series_field = v.get<std::string>();
      } else if (k == "log_x") {
        spec.log_x = v.get<bool>();
      } else if (k == "log_y") {
        spec.log_y = v.get<bool>();
      } else if (k == "title") {
        spec.title = v.get<std::string>();
      } else if (k == "width") {
        spec.width = v.get<int>();
      } else if (k == "height") {
        spec.height = v.get<int>();
      } else if (k != "records" && k != "output") {
        throw Error(ErrorCode::kConfigError, k + ": unknown field");
      }
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kConfigError, k + ": wrong type");
    }
  }
  if (spec.width < 200 || spec.height < 150) {
    throw Error(ErrorCode::kConfigError, "width/height: too small");
  }
  return spec;
}

std::string EmitPlot(const std::vector<RunRecord>& records,
                     const PlotSpec& spec) {
  // series -> x -> y values
  std::map<std::string, std::map<double, std::vector<double>>> groups;
  for (const auto& r : records) {
    const double x = RecordValue(r, spec.x_field);
    const double y = RecordValue(r, spec.y_field);
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if ((spec.log_x && !(x > 0.0))) continue;
    const std::string series =
        spec.series_field.empty() ? "" : RecordText(r, spec.series_field);
    groups[series][x].push_back(y);
  }
  std::map<std::string, std::vector<Point>> lines;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& [name, by_x] : groups) {
    for (const auto& [x, ys] : by_x) {
      Point p{x, Median(ys), Quantile(ys, 0.25), Quantile(ys, 0.75)};
      if (spec.log_y && !(p.median > 0.0)) continue;
      if (spec.log_y) {
        // Clamp the band to the drawable range.
        p.q25 = p.q25 > 0.0 ? p.q25 : p.median;
      }
      lines[name].push_back(p);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, p.q25);
      ymax = std::max(ymax, p.q75);
    }
  }
  if (lines.empty()) {
    throw Error(ErrorCode::kEmptyData, "no drawable points");
  }
  const Axis ax = MakeAxis(spec.log_x, xmin, xmax);
  const Axis ay = MakeAxis(spec.log_y, ymin, ymax);
  const double w = spec.width, h = spec.height;
  const double pw = w - kLeft - kRight, ph = h - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (ax.T(x) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double y) {
    return kTop + ph - (ay.T(y) - ay.lo) / (ay.hi - ay.lo) * ph;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width
      << ' ' << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg << "<text x=\"" << Num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << Escape(spec.title) << "</text>\n";
  }
  // Frame and ticks.
  svg << "<rect x=\"" << Num(kLeft) << "\" y=\"" << Num(kTop) << "\" width=\""
      << Num(pw) << "\" height=\"" << Num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.Ticks()) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    svg << "<line x1=\"" << Num(x) << "\" y1=\"" << Num(kTop + ph) << "\" x2=\""
        << Num(x) << "\" y2=\"" << Num(kTop + ph + 5)
        << "\" stroke=\"black\"/>\n";
    svg << "<text class=\"xtick\" x=\"" << Num(x) << "\" y=\""
        << Num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
        << ax.TickText(t) << "</text>\n";
  }
  for (double t : ay.Ticks()) {
    const double y = kTop + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
    svg << "<line x1=\"" << Num(kLeft - 5) << "\" y1=\"" << Num(y) << "\" x2=\""
        << Num(kLeft) << "\" y2=\"" << Num(y) << "\" stroke=\"black\"/>\n";
    svg << "<text class=\"ytick\" x=\"" << Num(kLeft - 8) << "\" y=\""
        << Num(y + 4) << "\" text-anchor=\"end\">" << ay.TickText(t)
        << "</text>\n";
  }
  svg << "<text x=\"" << Num(kLeft + pw / 2) << "\" y=\"" << Num(h - 12)
      << "\" text-anchor=\"middle\">" << Escape(spec.x_field) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << Num(kTop + ph / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << Num(kTop + ph / 2) << ")\">" << Escape(spec.y_field) << "</text>\n";

  std::size_t color = 0;
  for (const auto& [name, points] : lines) {
    const char* c = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
    // Interquartile band.
    svg << "<polygon fill=\"" << c << "\" fill-opacity=\"0.18\" stroke=\"none\" "
        << "points=\"";
    for (const auto& p : points) svg << Num(px(p.x)) << ',' << Num(py(p.q75)) << ' ';
    for (auto it = points.rbegin(); it != points.rend(); ++it) {
      svg << Num(px(it->x)) << ',' << Num(py(it->q25)) << ' ';
    }
    svg << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << c
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : points) svg << Num(px(p.x)) << ',' << Num(py(p.median)) << ' ';
    svg << "\"/>\n";
    for (const auto& p : points) {
      svg << "<circle class=\"marker\" cx=\"" << Num(px(p.x)) << "\" cy=\""
          << Num(py(p.median)) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
    const double ly = kTop + 12 + 18.0 * static_cast<double>(color);
    svg << "<line x1=\"" << Num(kLeft + pw + 12) << "\" y1=\"" << Num(ly)
        << "\" x2=\"" << Num(kLeft + pw + 32) << "\" y2=\"" << Num(ly)
        << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << Num(kLeft + pw + 38) << "\" y=\"" << Num(ly + 4)
        << "\">" << Escape(name.empty() ? spec.y_field : name) << "</text>\n";
    ++color;
  }
  svg << "</svg>\n";
  return svg.str();
}

void WritePlot(const std::vector<RunRecord>& records, const PlotSpec& spec,
               const std::string& path) {
  const std::string svg = EmitPlot(records, spec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << svg;
}

}  // namespace prefalign
