#ifndef LATENTIC_REPORT_HPP
#define LATENTIC_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "latentic/vecmath.hpp"

namespace latentic {

// Tabular experiment output with a fixed column schema, serialized as CSV.
struct ExperimentReport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

std::string format_number(double v);

void write_csv(const ExperimentReport& report, const std::filesystem::path& path);

// Minimal line plot: one polyline per series on a shared x axis.
void write_svg_lines(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, Vec>>& series,
                     const std::string& title);

}  // namespace latentic

#endif
