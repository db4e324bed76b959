#pragma once

/// @file svg.hpp
/// Minimal self-contained SVG line plots. Output is a pure function of the
/// input series (fixed canvas, fixed palette, fixed-precision coordinates),
/// so repeated runs produce byte-identical files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntklab {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

inline std::string sig4(double v) {
  char buf[48];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

inline const char* svg_palette(std::size_t i) {
  static const char* colors[] = {"#1f6f8b", "#c0392b", "#2d7a36", "#8e5fa8",
                                 "#b07c1f", "#456"};
  return colors[i % 6];
}

}  // namespace detail

/// Renders line series on a 640x420 canvas. `log_y` plots log10 of the
/// values and requires strictly positive data.
inline std::string svg_line_plot(const std::string& title,
                                 const std::string& x_label,
                                 const std::string& y_label,
                                 const std::vector<SvgSeries>& series,
                                 bool log_y = false) {
  if (series.empty()) throw std::invalid_argument("svg_line_plot: no series");
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw std::invalid_argument("svg_line_plot: bad series '" + s.label + "'");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double yv = s.y[i];
      if (log_y) {
        if (!(yv > 0.0))
          throw std::invalid_argument(
              "svg_line_plot: log scale needs positive values");
        yv = std::log10(yv);
      }
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = yv;
        first = false;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, yv);
        ymax = std::max(ymax, yv);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const auto px = [&](double v) {
    return L + (v - xmin) / (xmax - xmin) * (W - L - R);
  };
  const auto py = [&](double v) {
    return H - B - (v - ymin) / (ymax - ymin) * (H - T - B);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" "
         "font-size=\"15\">" + title + "</text>\n";
  svg += "<text x=\"320\" y=\"408\" text-anchor=\"middle\" font-family=\"monospace\" "
         "font-size=\"12\">" + x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"210\" text-anchor=\"middle\" font-family=\"monospace\" "
         "font-size=\"12\" transform=\"rotate(-90 16 210)\">" +
         (log_y ? "log10 " + y_label : y_label) + "</text>\n";
  // Frame and ticks.
  svg += "<rect x=\"" + detail::fixed2(L) + "\" y=\"" + detail::fixed2(T) +
         "\" width=\"" + detail::fixed2(W - L - R) + "\" height=\"" +
         detail::fixed2(H - T - B) +
         "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg += "<line x1=\"" + detail::fixed2(px(fx)) + "\" y1=\"" +
           detail::fixed2(H - B) + "\" x2=\"" + detail::fixed2(px(fx)) +
           "\" y2=\"" + detail::fixed2(H - B + 5) +
           "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + detail::fixed2(px(fx)) + "\" y=\"" +
           detail::fixed2(H - B + 18) +
           "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">" +
           detail::sig4(fx) + "</text>\n";
    svg += "<line x1=\"" + detail::fixed2(L - 5) + "\" y1=\"" +
           detail::fixed2(py(fy)) + "\" x2=\"" + detail::fixed2(L) + "\" y2=\"" +
           detail::fixed2(py(fy)) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + detail::fixed2(L - 8) + "\" y=\"" +
           detail::fixed2(py(fy) + 3) +
           "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">" +
           detail::sig4(fy) + "</text>\n";
  }
  // Series.
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i) pts += ' ';
      const double yv = log_y ? std::log10(series[s].y[i]) : series[s].y[i];
      pts += detail::fixed2(px(series[s].x[i])) + "," + detail::fixed2(py(yv));
    }
    svg += "<polyline fill=\"none\" stroke=\"" +
           std::string(detail::svg_palette(s)) + "\" stroke-width=\"1.5\" points=\"" +
           pts + "\"/>\n";
    svg += "<text x=\"" + detail::fixed2(W - R - 6) + "\" y=\"" +
           detail::fixed2(T + 16 + 14 * static_cast<double>(s)) +
           "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\" "
           "fill=\"" + detail::svg_palette(s) + "\">" + series[s].label +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace ntklab
