#include "latentic/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace latentic {

void ExperimentReport::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("ExperimentReport: row width mismatch");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path.string());
  for (size_t c = 0; c < report.columns.size(); ++c)
    os << report.columns[c] << (c + 1 < report.columns.size() ? "," : "\n");
  for (const auto& row : report.rows)
    for (size_t c = 0; c < row.size(); ++c) os << row[c] << (c + 1 < row.size() ? "," : "\n");
  if (!os) throw std::runtime_error("write_csv: write failed " + path.string());
}

void write_svg_lines(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Vec>>& series,
                     const std::string& title) {
  const int width = 900, height = 300, margin = 40;
  double lo = 1e300, hi = -1e300;
  size_t n = 0;
  for (const auto& [label, v] : series) {
    n = std::max(n, v.size());
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (n < 2) return;
  if (hi <= lo) hi = lo + 1.0;

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_svg_lines: cannot open " + path.string());
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\">\n";
  os << "<text x=\"" << margin << "\" y=\"16\" font-size=\"12\">" << title << "</text>\n";
  char buf[64];
  for (size_t s = 0; s < series.size(); ++s) {
    const Vec& v = series[s].second;
    os << "<polyline fill=\"none\" stroke=\"" << kColors[s % 5] << "\" points=\"";
    for (size_t i = 0; i < v.size(); ++i) {
      const double x = margin + (width - 2.0 * margin) * static_cast<double>(i) /
                                    static_cast<double>(n - 1);
      const double y = height - margin -
                       (height - 2.0 * margin) * (v[i] - lo) / (hi - lo);
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
      os << buf;
    }
    os << "\"/>\n";
    os << "<text x=\"" << margin + 90 * s << "\" y=\"" << height - 8
       << "\" font-size=\"11\" fill=\"" << kColors[s % 5] << "\">" << series[s].first
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace latentic
