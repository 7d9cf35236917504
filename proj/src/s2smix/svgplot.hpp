#pragma once

#include <string>
#include <vector>

namespace s2smix {

// Minimal static SVG charts for offline inspection of training runs.

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series);

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values);

}  // namespace s2smix
