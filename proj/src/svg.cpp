#include "contnash/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "contnash/errors.h"

namespace contnash {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  double clampx(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.5; }
};

Range nice_range(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (lo == hi) {
    double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

void axes(std::ostringstream& out, const Range& xr, const Range& yr, const std::string& title,
          const std::string& x_label, const std::string& y_label) {
  double px0 = kLeft, px1 = kWidth - kRight, py0 = kHeight - kBottom, py1 = kTop;
  out << "<line x1='" << px0 << "' y1='" << py0 << "' x2='" << px1 << "' y2='" << py0
      << "' stroke='black'/>\n";
  out << "<line x1='" << px0 << "' y1='" << py0 << "' x2='" << px0 << "' y2='" << py1
      << "' stroke='black'/>\n";
  for (int t = 0; t <= 4; ++t) {
    double f = t / 4.0;
    double xv = xr.lo + f * (xr.hi - xr.lo);
    double yv = yr.lo + f * (yr.hi - yr.lo);
    double px = px0 + f * (px1 - px0);
    double py = py0 - f * (py0 - py1);
    out << "<line x1='" << px << "' y1='" << py0 << "' x2='" << px << "' y2='" << (py0 + 5)
        << "' stroke='black'/>\n";
    out << "<text x='" << px << "' y='" << (py0 + 18)
        << "' font-size='11' text-anchor='middle'>" << fmt(xv) << "</text>\n";
    out << "<line x1='" << (px0 - 5) << "' y1='" << py << "' x2='" << px0 << "' y2='" << py
        << "' stroke='black'/>\n";
    out << "<text x='" << (px0 - 8) << "' y='" << (py + 4)
        << "' font-size='11' text-anchor='end'>" << fmt(yv) << "</text>\n";
  }
  out << "<text x='" << (kWidth / 2) << "' y='20' font-size='14' text-anchor='middle'>" << title
      << "</text>\n";
  out << "<text x='" << (kWidth / 2) << "' y='" << (kHeight - 12)
      << "' font-size='12' text-anchor='middle'>" << x_label << "</text>\n";
  out << "<text x='16' y='" << (kHeight / 2)
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 " << (kHeight / 2)
      << ")'>" << y_label << "</text>\n";
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open SVG for writing: " + path);
  out << body;
  if (!out) throw IoError("failed writing SVG: " + path);
}

}  // namespace

void write_svg_line_plot(const SvgLinePlot& plot, const std::string& path) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : plot.series) {
    for (double v : s.x) { xlo = std::min(xlo, v); xhi = std::max(xhi, v); }
    for (double v : s.y) { ylo = std::min(ylo, v); yhi = std::max(yhi, v); }
    for (double v : s.band_lo) ylo = std::min(ylo, v);
    for (double v : s.band_hi) yhi = std::max(yhi, v);
  }
  if (!std::isfinite(xlo)) { xlo = 0.0; xhi = 1.0; ylo = 0.0; yhi = 1.0; }
  Range xr = nice_range(xlo, xhi), yr = nice_range(ylo, yhi);

  double px0 = kLeft, px1 = kWidth - kRight, py0 = kHeight - kBottom, py1 = kTop;
  auto px = [&](double v) { return px0 + xr.clampx(v) * (px1 - px0); };
  auto py = [&](double v) { return py0 - yr.clampx(v) * (py0 - py1); };

  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "' viewBox='0 0 " << kWidth << ' ' << kHeight << "'>\n";
  out << "<rect width='" << kWidth << "' height='" << kHeight << "' fill='white'/>\n";
  axes(out, xr, yr, plot.title, plot.x_label, plot.y_label);

  for (const auto& s : plot.series) {
    if (!s.band_lo.empty() && s.band_lo.size() == s.x.size() && s.band_hi.size() == s.x.size()) {
      out << "<path fill='" << s.color << "' fill-opacity='0.2' stroke='none' d='M";
      for (std::size_t k = 0; k < s.x.size(); ++k)
        out << ' ' << fmt(px(s.x[k])) << ' ' << fmt(py(s.band_hi[k])) << " L";
      for (std::size_t k = s.x.size(); k-- > 0;)
        out << ' ' << fmt(px(s.x[k])) << ' ' << fmt(py(s.band_lo[k]))
            << (k == 0 ? " Z" : " L");
      out << "'/>\n";
    }
  }
  for (const auto& s : plot.series) {
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (k) out << ' ';
      out << fmt(px(s.x[k])) << ',' << fmt(py(s.y[k]));
    }
    out << "'/>\n";
  }
  // legend, top-right corner of the plot area
  double lx = px1 - 150.0, ly = py1 + 10.0;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    double yy = ly + 16.0 * static_cast<double>(k);
    out << "<line x1='" << lx << "' y1='" << yy << "' x2='" << (lx + 24) << "' y2='" << yy
        << "' stroke='" << plot.series[k].color << "' stroke-width='2'/>\n";
    out << "<text x='" << (lx + 30) << "' y='" << (yy + 4) << "' font-size='11'>"
        << plot.series[k].label << "</text>\n";
  }
  out << "</svg>\n";
  write_file(path, out.str());
}

void write_svg_heatmap(const SvgHeatmap& map, const std::string& path) {
  if (map.rows < 1 || map.cols < 1 ||
      map.values.size() != static_cast<std::size_t>(map.rows) * map.cols) {
    throw IoError("write_svg_heatmap: inconsistent grid");
  }
  double vlo = std::numeric_limits<double>::infinity(), vhi = -vlo;
  for (double v : map.values) { vlo = std::min(vlo, v); vhi = std::max(vhi, v); }
  if (!(vhi > vlo)) vhi = vlo + 1.0;

  double px0 = kLeft, px1 = kWidth - kRight, py0 = kHeight - kBottom, py1 = kTop;
  double cw = (px1 - px0) / map.cols, ch = (py0 - py1) / map.rows;

  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "' viewBox='0 0 " << kWidth << ' ' << kHeight << "'>\n";
  out << "<rect width='" << kWidth << "' height='" << kHeight << "' fill='white'/>\n";
  Range xr{map.x0, map.x1}, yr{map.y0, map.y1};
  axes(out, xr, yr, map.title, map.x_label, map.y_label);

  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      double v = (map.values[static_cast<std::size_t>(r) * map.cols + c] - vlo) / (vhi - vlo);
      // white -> dark blue ramp
      int red = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      int green = static_cast<int>(std::lround(255.0 * (1.0 - 0.7 * v)));
      int blue = static_cast<int>(std::lround(255.0 * (1.0 - 0.4 * v)));
      double x = px0 + c * cw;
      double y = py0 - (r + 1) * ch;  // row 0 at the bottom
      out << "<rect x='" << fmt(x) << "' y='" << fmt(y) << "' width='" << fmt(cw + 0.5)
          << "' height='" << fmt(ch + 0.5) << "' fill='rgb(" << red << ',' << green << ','
          << blue << ")'/>\n";
    }
  }
  out << "<text x='" << (kWidth - kRight) << "' y='" << (kTop - 8)
      << "' font-size='11' text-anchor='end'>min " << fmt(vlo) << ", max " << fmt(vhi)
      << "</text>\n";
  out << "</svg>\n";
  write_file(path, out.str());
}

}  // namespace contnash
