#pragma once

#include <string>
#include <vector>

namespace krf {

struct PlotLine {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

// Static log-log line chart. Non-positive points are dropped.
struct LogLogPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotLine> lines;
  // Reverse the x axis so that time runs left to right when x = E(t).
  bool reverse_x = true;
};

std::string render_svg(const LogLogPlot& plot, int width = 640, int height = 420);

}  // namespace krf
