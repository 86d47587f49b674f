#pragma once

#include <string>
#include <vector>

namespace sgain::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with a log10 y axis; nonpositive values are dropped.
std::string svg_log_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                          int width = 640, int height = 400);

}  // namespace sgain::cli
