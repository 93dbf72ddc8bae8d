#pragma once

#include "dbrf/core/common.hpp"
#include "dbrf/data/csv.hpp"

#include <optional>
#include <sstream>

namespace dbrf::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::optional<double> reference_y;  // horizontal dashed line
  std::string reference_label;
};

inline constexpr int kWidth = 640;
inline constexpr int kHeight = 420;
inline constexpr int kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string num(double v) { return csv::format_fixed(v, 2); }

struct Range {
  double lo = 0.0, hi = 1.0;
  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi - lo < 1e-12) {
      const double d = std::max(std::abs(lo) * 0.1, 0.5);
      lo -= d;
      hi += d;
    } else {
      const double d = 0.05 * (hi - lo);
      lo -= d;
      hi += d;
    }
  }
};

struct Frame {
  Range xr, yr;
  double px(double x) const { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kTop - kBottom); }
};

inline void header(std::ostream& os, const Axes& axes, const Frame& f) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(axes.title)
     << "</text>\n";
  const int x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.xr.lo + (f.xr.hi - f.xr.lo) * t / 4.0;
    const double yv = f.yr.lo + (f.yr.hi - f.yr.lo) * t / 4.0;
    os << "<line x1=\"" << num(f.px(xv)) << "\" y1=\"" << y0 << "\" x2=\"" << num(f.px(xv)) << "\" y2=\"" << y0 + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << y0 + 19 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    os << "<line x1=\"" << x0 - 5 << "\" y1=\"" << num(f.py(yv)) << "\" x2=\"" << x0 << "\" y2=\"" << num(f.py(yv))
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 - 8 << "\" y=\"" << num(f.py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
     << escape(axes.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (y0 + y1) / 2
     << ")\">" << escape(axes.y_label) << "</text>\n";
}

inline void legend_entry(std::ostream& os, std::size_t i, const std::string& color, const std::string& label,
                         bool dashed = false) {
  const int x = kWidth - kRight + 15, y = kTop + 10 + static_cast<int>(i) * 20;
  os << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 22 << "\" y2=\"" << y << "\" stroke=\"" << color
     << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"5,4\"" : "") << "/>\n";
  os << "<text x=\"" << x + 28 << "\" y=\"" << y + 4 << "\">" << escape(label) << "</text>\n";
}

/// Line chart with markers, legend and optional horizontal reference line.
/// Output bytes depend only on the inputs.
inline std::string linechart(const std::vector<Series>& series, const Axes& axes) {
  if (series.empty()) throw ConfigError("svg linechart: no series");
  Frame f;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.empty()) throw ConfigError("svg linechart: series '" + s.name + "' is empty");
    if (s.x.size() != s.y.size()) throw ConfigError("svg linechart: series '" + s.name + "' has x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw ConfigError("svg linechart: series '" + s.name + "' holds a non-finite value");
      if (first) {
        f.xr = {s.x[i], s.x[i]};
        f.yr = {s.y[i], s.y[i]};
        first = false;
      }
      f.xr.include(s.x[i]);
      f.yr.include(s.y[i]);
    }
  }
  if (axes.reference_y) {
    if (!std::isfinite(*axes.reference_y)) throw ConfigError("svg linechart: non-finite reference line");
    f.yr.include(*axes.reference_y);
  }
  f.xr.pad();
  f.yr.pad();

  std::ostringstream os;
  header(os, axes, f);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i]));
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx=\"" << num(f.px(s.x[i])) << "\" cy=\"" << num(f.py(s.y[i])) << "\" r=\"3.5\" fill=\""
         << palette(k) << "\"/>\n";
    legend_entry(os, k, palette(k), s.name);
  }
  if (axes.reference_y) {
    const double y = f.py(*axes.reference_y);
    os << "<line x1=\"" << kLeft << "\" y1=\"" << num(y) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << num(y)
       << "\" stroke=\"#444\" stroke-dasharray=\"5,4\"/>\n";
    legend_entry(os, series.size(), "#444", axes.reference_label, true);
  }
  os << "</svg>\n";
  return os.str();
}

/// Scatter plot of 2-d points colored by a group bit (1 = protected, dark).
inline std::string scatter(const Matrix& points, const std::vector<std::uint8_t>& group, const Axes& axes,
                           const std::string& protected_label = "protected",
                           const std::string& other_label = "privileged") {
  if (points.rows() == 0) throw ConfigError("svg scatter: no points");
  if (points.cols() != 2) throw ConfigError("svg scatter: points must have two columns");
  if (static_cast<std::size_t>(points.rows()) != group.size()) throw ConfigError("svg scatter: one group bit per point");
  if (!points.allFinite()) throw ConfigError("svg scatter: non-finite coordinate");
  Frame f;
  f.xr = {points.col(0).minCoeff(), points.col(0).maxCoeff()};
  f.yr = {points.col(1).minCoeff(), points.col(1).maxCoeff()};
  f.xr.pad();
  f.yr.pad();
  std::ostringstream os;
  header(os, axes, f);
  const char* colors[2] = {"#9ecae1", "#08306b"};
  // Privileged group first so the protected group is drawn on top.
  for (int g = 0; g < 2; ++g)
    for (Index i = 0; i < points.rows(); ++i)
      if ((group[static_cast<std::size_t>(i)] ? 1 : 0) == g)
        os << "<circle cx=\"" << num(f.px(points(i, 0))) << "\" cy=\"" << num(f.py(points(i, 1)))
           << "\" r=\"2\" fill=\"" << colors[g] << "\" fill-opacity=\"0.7\"/>\n";
  legend_entry(os, 0, colors[1], protected_label);
  legend_entry(os, 1, colors[0], other_label);
  os << "</svg>\n";
  return os.str();
}

}  // namespace dbrf::svg
