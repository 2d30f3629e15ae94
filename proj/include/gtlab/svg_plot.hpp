#pragma once

// Minimal deterministic SVG line/scatter plots with linear or log10 y axes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gtlab/errors.hpp"

namespace gtlab {

enum class SeriesStyle { Line, Markers };

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  SeriesStyle style = SeriesStyle::Line;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  double width = 640.0;
  double height = 420.0;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Ticks at 1, 2 or 5 times a power of ten, about `target` of them.
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

}  // namespace detail

/// Writes a complete SVG document. Non-finite points (and non-positive ones
/// on a log axis) are skipped; a line series is broken at skipped points.
inline void write_svg(std::ostream& os, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0.0); };
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ValidationError("plot: series '" + s.name + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) throw ValidationError("plot: no finite points to draw");
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  if (spec.log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }

  const double left = 70.0;
  const double right = 20.0;
  const double top = 36.0;
  const double bottom = 50.0;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };
  using detail::svg_num;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(spec.width) << "\" height=\""
     << svg_num(spec.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << svg_num(spec.width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::svg_escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << svg_num(left) << "\" y=\"" << svg_num(top) << "\" width=\"" << svg_num(pw) << "\" height=\""
     << svg_num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (const double t : detail::nice_ticks(xmin, xmax)) {
    os << "<line x1=\"" << svg_num(px(t)) << "\" y1=\"" << svg_num(top + ph) << "\" x2=\"" << svg_num(px(t))
       << "\" y2=\"" << svg_num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << svg_num(px(t)) << "\" y=\"" << svg_num(top + ph + 18) << "\" text-anchor=\"middle\">"
       << detail::tick_label(t) << "</text>\n";
  }
  std::vector<double> yt;
  if (spec.log_y) {
    const int span = static_cast<int>(ymax - ymin);
    const int stride = std::max(1, span / 8);
    for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += stride) yt.push_back(e);
  } else {
    yt = detail::nice_ticks(ymin, ymax);
  }
  for (const double t : yt) {
    os << "<line x1=\"" << svg_num(left - 5) << "\" y1=\"" << svg_num(py(t)) << "\" x2=\"" << svg_num(left)
       << "\" y2=\"" << svg_num(py(t)) << "\" stroke=\"black\"/>\n";
    const std::string label = spec.log_y ? "1e" + detail::tick_label(t) : detail::tick_label(t);
    os << "<text x=\"" << svg_num(left - 8) << "\" y=\"" << svg_num(py(t) + 4) << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  os << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"" << svg_num(spec.height - 10)
     << "\" text-anchor=\"middle\">" << detail::svg_escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << svg_num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::svg_escape(spec.y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = detail::palette(si);
    if (s.style == SeriesStyle::Line) {
      std::string path;
      bool pen_down = false;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(s.x[i], s.y[i])) {
          pen_down = false;
          continue;
        }
        path += (pen_down ? " L" : " M") + svg_num(px(s.x[i])) + "," + svg_num(py(ty(s.y[i])));
        pen_down = true;
      }
      os << "<path d=\"" << path.substr(path.empty() ? 0 : 1) << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(s.x[i], s.y[i])) continue;
        os << "<circle cx=\"" << svg_num(px(s.x[i])) << "\" cy=\"" << svg_num(py(ty(s.y[i]))) << "\" r=\"2.5\" fill=\""
           << color << "\"/>\n";
      }
    }
    const double ly = top + 14.0 + 16.0 * static_cast<double>(si);
    os << "<line x1=\"" << svg_num(left + pw - 150) << "\" y1=\"" << svg_num(ly - 4) << "\" x2=\""
       << svg_num(left + pw - 130) << "\" y2=\"" << svg_num(ly - 4) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << svg_num(left + pw - 125) << "\" y=\"" << svg_num(ly) << "\">" << detail::svg_escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace gtlab
