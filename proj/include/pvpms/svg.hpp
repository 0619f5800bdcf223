#pragma once

// Line chart of hourly average power, written directly as SVG.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "pvpms/csv.hpp"
#include "pvpms/system_sim.hpp"

namespace pvpms::io {

struct ChartSeries {
  std::string name;
  std::string color;
  std::vector<HourlyAverage> points;
};

inline std::string xml_escape(const std::string& s) {
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

inline void write_hourly_chart(std::ostream& out, const std::vector<ChartSeries>& series, const std::string& title) {
  constexpr double width = 800.0, height = 500.0;
  constexpr double left = 70.0, right = 170.0, top = 50.0, bottom = 60.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  int h_min = 24, h_max = 0;
  double p_max = 0.0;
  for (const auto& s : series) {
    for (const auto& pt : s.points) {
      h_min = std::min(h_min, pt.hour);
      h_max = std::max(h_max, pt.hour);
      p_max = std::max(p_max, pt.avg_w);
    }
  }
  if (h_min > h_max) h_min = h_max = 0;
  if (h_max == h_min) h_max = h_min + 1;
  const double y_top = p_max > 0.0 ? 20.0 * std::ceil(p_max / 20.0) : 20.0;
  auto x_of = [&](double h) { return left + (h - h_min) / (h_max - h_min) * plot_w; };
  auto y_of = [&](double p) { return top + plot_h - p / y_top * plot_h; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n"
      << "  <text x=\"" << fixed(width / 2, 1) << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << xml_escape(title) << "</text>\n";

  // Axes
  out << "  <g stroke=\"black\" stroke-width=\"1\">\n"
      << "    <line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(top + plot_h, 1) << "\" x2=\""
      << fixed(left + plot_w, 1) << "\" y2=\"" << fixed(top + plot_h, 1) << "\"/>\n"
      << "    <line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(top, 1) << "\" x2=\"" << fixed(left, 1)
      << "\" y2=\"" << fixed(top + plot_h, 1) << "\"/>\n"
      << "  </g>\n";

  out << "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int h = h_min; h <= h_max; ++h) {
    const double x = x_of(h);
    out << "    <line x1=\"" << fixed(x, 1) << "\" y1=\"" << fixed(top + plot_h, 1) << "\" x2=\"" << fixed(x, 1)
        << "\" y2=\"" << fixed(top + plot_h + 5, 1) << "\" stroke=\"black\"/>\n"
        << "    <text x=\"" << fixed(x, 1) << "\" y=\"" << fixed(top + plot_h + 18, 1)
        << "\" text-anchor=\"middle\">" << hour_label(h) << "</text>\n";
  }
  for (double p = 0.0; p <= y_top + 1e-9; p += y_top / 5.0) {
    const double y = y_of(p);
    out << "    <line x1=\"" << fixed(left - 5, 1) << "\" y1=\"" << fixed(y, 1) << "\" x2=\"" << fixed(left, 1)
        << "\" y2=\"" << fixed(y, 1) << "\" stroke=\"black\"/>\n"
        << "    <text x=\"" << fixed(left - 8, 1) << "\" y=\"" << fixed(y + 4, 1) << "\" text-anchor=\"end\">"
        << fixed(p, 0) << "</text>\n";
  }
  out << "  </g>\n"
      << "  <text x=\"" << fixed(left + plot_w / 2, 1) << "\" y=\"" << fixed(height - 15, 1)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">Time of day</text>\n"
      << "  <text x=\"18\" y=\"" << fixed(top + plot_h / 2, 1) << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " << fixed(top + plot_h / 2, 1)
      << ")\">Average power (W)</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "  <polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (i) out << ' ';
      out << fixed(x_of(s.points[i].hour), 2) << ',' << fixed(y_of(s.points[i].avg_w), 2);
    }
    out << "\"/>\n";
    const double ly = top + 20.0 + 20.0 * static_cast<double>(k);
    out << "  <line x1=\"" << fixed(width - right + 15, 1) << "\" y1=\"" << fixed(ly, 1) << "\" x2=\""
        << fixed(width - right + 40, 1) << "\" y2=\"" << fixed(ly, 1) << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n"
        << "  <text x=\"" << fixed(width - right + 45, 1) << "\" y=\"" << fixed(ly + 4, 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace pvpms::io
