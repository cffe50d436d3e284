#pragma once

#include <string>
#include <vector>

namespace opfa {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> error;  ///< half-width of the error bar; may be empty
};

/// Self-contained SVG line chart with optional error bars.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series, int width = 640, int height = 420);

}  // namespace opfa
