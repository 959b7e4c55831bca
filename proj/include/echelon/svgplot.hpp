#pragma once

#include <string>
#include <vector>

namespace echelon::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // optional +- band half-width per point
  bool dashed = false;
};

/// Plain SVG line chart; data points are plotted exactly as given.
void line_chart(const std::string& path, const std::string& title,
                const std::string& x_label, const std::string& y_label,
                const std::vector<Series>& series);

/// Grouped bar chart (one group per x category).
void bar_chart(const std::string& path, const std::string& title,
               const std::vector<std::string>& categories,
               const std::vector<Series>& series);

}  // namespace echelon::svg
