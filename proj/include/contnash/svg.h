#pragma once

#include <string>
#include <vector>

namespace contnash {

// Self-contained SVG line plot. Each series draws exactly one polyline; an
// optional band (lo/hi per point) is drawn as a filled path behind its series.
struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band_lo;  // empty = no band
  std::vector<double> band_hi;
};

struct SvgLinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
};

void write_svg_line_plot(const SvgLinePlot& plot, const std::string& path);

// Self-contained SVG heatmap of a row-major grid (rows x cols) over
// [x0,x1] x [y0,y1], with axis labels and a min/max legend.
struct SvgHeatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // row-major, rows*cols
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

void write_svg_heatmap(const SvgHeatmap& map, const std::string& path);

}  // namespace contnash
