#pragma once

#include <string>
#include <utility>
#include <vector>

namespace diffudec {

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y)
    bool scatter = false;                           // markers only, no connecting line
    bool dashed = false;
};

struct SvgChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<SvgSeries> series;
};

// Renders a complete standalone SVG document. Pure text output, no display
// or font dependencies.
std::string render_svg(const SvgChart& chart);

}  // namespace diffudec
