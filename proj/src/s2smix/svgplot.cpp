#include "s2smix/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kMargin = 50;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void extend(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi == lo) hi = lo + 1.0;
  }
  double map(double v, double out_lo, double out_hi) const {
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

std::ofstream open_svg(const std::string& path, const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
  return out;
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series) {
  Range xr, yr;
  for (const Series& s : series) {
    for (double v : s.x) xr.extend(v);
    for (double v : s.y) yr.extend(v);
  }
  xr.pad();
  yr.pad();

  std::ofstream out = open_svg(path, title);
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 20
      << "\" font-size=\"11\" font-family=\"sans-serif\">" << xr.lo << "</text>\n"
      << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 20
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << xr.hi
      << "</text>\n"
      << "<text x=\"" << kMargin - 6 << "\" y=\"" << kHeight - kMargin
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << yr.lo
      << "</text>\n"
      << "<text x=\"" << kMargin - 6 << "\" y=\"" << kMargin + 4
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << yr.hi
      << "</text>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < series[s].x.size(); ++i) {
      const double px = xr.map(series[s].x[i], kMargin, kWidth - kMargin);
      const double py = yr.map(series[s].y[i], kHeight - kMargin, kMargin);
      out << px << "," << py << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 16 * (s + 1)
        << "\" text-anchor=\"end\" fill=\"" << color
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values) {
  if (labels.size() != values.size()) throw DataError("bar chart: label/value count mismatch");
  Range yr;
  yr.extend(0.0);
  for (double v : values) yr.extend(v);
  yr.pad();

  std::ofstream out = open_svg(path, title);
  const int n = static_cast<int>(values.size());
  const double band = static_cast<double>(kWidth - 2 * kMargin) / std::max(1, n);
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  for (int i = 0; i < n; ++i) {
    const double x = kMargin + band * i + band * 0.15;
    const double w = band * 0.7;
    const double top = yr.map(values[static_cast<size_t>(i)], kHeight - kMargin, kMargin);
    out << "<rect x=\"" << x << "\" y=\"" << top << "\" width=\"" << w << "\" height=\""
        << (kHeight - kMargin - top) << "\" fill=\"" << kColors[0] << "\"/>\n";
    out << "<text x=\"" << x + w / 2 << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << labels[static_cast<size_t>(i)] << "</text>\n";
    out << "<text x=\"" << x + w / 2 << "\" y=\"" << top - 4
        << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">"
        << values[static_cast<size_t>(i)] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace s2smix
