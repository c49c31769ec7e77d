#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pbrwp/io.hpp"

namespace pbrwp {

// Plain-text SVG line plot of a metrics table: first column on the x axis,
// every other column as one polyline. No external plotting dependency.
inline void write_metrics_svg(const CsvTable& table, const std::string& path) {
  if (table.header.size() < 2)
    throw std::runtime_error("metrics table needs at least two columns");
  if (table.rows.empty())
    throw std::runtime_error("metrics table has no data rows");

  const int width = 860, height = 520;
  const int ml = 70, mr = 180, mt = 30, mb = 50;
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& row : table.rows) {
    if (row.empty() || std::isnan(row[0])) continue;
    xmin = std::min(xmin, row[0]);
    xmax = std::max(xmax, row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (std::isnan(row[c])) continue;
      ymin = std::min(ymin, row[c]);
      ymax = std::max(ymax, row[c]);
    }
  }
  if (!(xmin < xmax)) xmax = xmin + 1.0;
  if (!(ymin < ymax)) ymax = ymin + 1.0;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) {
    return mt + plot_h - (y - ymin) / (ymax - ymin) * plot_h;
  };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2"};
  const int n_colors = 7;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  // axis labels
  for (int tick = 0; tick <= 4; ++tick) {
    double fx = xmin + (xmax - xmin) * tick / 4.0;
    double fy = ymin + (ymax - ymin) * tick / 4.0;
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << height - mb + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fx << "</text>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << fy << "</text>\n";
  }
  svg << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\">" << table.header[0]
      << "</text>\n";

  for (std::size_t c = 1; c < table.header.size(); ++c) {
    std::ostringstream points;
    bool any = false;
    for (const auto& row : table.rows) {
      if (row.size() <= c || std::isnan(row[0]) || std::isnan(row[c]))
        continue;
      points << sx(row[0]) << "," << sy(row[c]) << " ";
      any = true;
    }
    const char* color = palette[(c - 1) % n_colors];
    if (any)
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"" << points.str() << "\"/>\n";
    double ly = mt + 16.0 + 18.0 * static_cast<double>(c - 1);
    svg << "<line x1=\"" << width - mr + 12 << "\" y1=\"" << ly << "\" x2=\""
        << width - mr + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << width - mr + 42 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << table.header[c] << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << svg.str();
}

}  // namespace pbrwp
