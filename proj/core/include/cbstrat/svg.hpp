#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cbstrat {

// Static SVG figures, no external renderer. Every chart is backed by a CSV
// with the same numbers, written by the report stage.

struct BarSeries {
  std::string name;
  std::vector<double> values;  // aligned with the category labels
};

// Grouped (n_series == 1 -> plain) bars; stacked = true stacks the series.
std::string render_bar_chart(const std::string& title, const std::vector<std::string>& categories,
                             const std::vector<BarSeries>& series, bool stacked);

struct ScatterGroup {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::string render_scatter(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ScatterGroup>& groups);

}  // namespace cbstrat
