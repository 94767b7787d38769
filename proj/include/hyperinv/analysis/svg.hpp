#pragma once

#include <span>
#include <string>
#include <vector>

namespace hyperinv::analysis {

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

/// Standalone SVG line plot of several series over shared x values.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          std::span<const double> x, std::span<const PlotSeries> series);

}  // namespace hyperinv::analysis
