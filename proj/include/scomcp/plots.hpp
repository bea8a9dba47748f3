// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace scomcp::plots {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// minimal dependency-free SVG line chart with axes, ticks and a legend
void line_chart_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<Series>& series,
                    bool log_y = false);

}  // namespace scomcp::plots
