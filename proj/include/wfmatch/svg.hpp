#pragma once

#include <string>
#include <vector>

#include "wfmatch/io.hpp"

namespace wfm {

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<std::pair<double, double>> points;
};

// Bare-bones line chart, enough for PR and cumulative-error plots.
inline void write_svg_curves(const std::string& path, const std::vector<SvgSeries>& series,
                             const std::string& title, double x_min, double x_max, double y_min, double y_max) {
  const int W = 640, H = 480, pad = 50;
  auto sx = [&](double x) { return pad + (x - x_min) / (x_max - x_min) * (W - 2 * pad); };
  auto sy = [&](double y) { return H - pad - (y - y_min) / (y_max - y_min) * (H - 2 * pad); };

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  s << "<rect width='100%' height='100%' fill='white'/>\n";
  s << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title << "</text>\n";
  s << "<line x1='" << pad << "' y1='" << H - pad << "' x2='" << W - pad << "' y2='" << H - pad
    << "' stroke='black'/>\n";
  s << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='" << H - pad << "' stroke='black'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_min + (x_max - x_min) * k / 4.0;
    const double fy = y_min + (y_max - y_min) * k / 4.0;
    s << "<text x='" << sx(fx) << "' y='" << H - pad + 18 << "' text-anchor='middle' font-size='11'>" << fx
      << "</text>\n";
    s << "<text x='" << pad - 8 << "' y='" << sy(fy) + 4 << "' text-anchor='end' font-size='11'>" << fy
      << "</text>\n";
  }
  int legend_y = pad;
  for (const auto& sr : series) {
    if (!sr.points.empty()) {
      s << "<polyline fill='none' stroke='" << sr.color << "' stroke-width='1.5' points='";
      for (const auto& [x, y] : sr.points) s << sx(x) << "," << sy(y) << " ";
      s << "'/>\n";
    }
    s << "<text x='" << W - pad - 4 << "' y='" << legend_y << "' text-anchor='end' font-size='12' fill='"
      << sr.color << "'>" << sr.label << "</text>\n";
    legend_y += 16;
  }
  s << "</svg>\n";
  atomic_write(path, s.str());
}

}  // namespace wfm
