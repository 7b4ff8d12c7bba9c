#pragma once

#include <string>
#include <vector>

namespace subdiff::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line chart in a fixed 800x500 viewBox, one polyline per series.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

}  // namespace subdiff::cli
