#pragma once

#include <array>
#include <string>
#include <vector>

namespace grasp::report {

// Fixed per-index palette so head k has the same color in every figure.
const std::string& head_color(std::size_t k);

std::string xml_escape(const std::string& s);

struct Curve {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> err;  // half-width of the shaded band; NaN points are skipped
};

// Line plot with one shaded mean +- err band per curve and a legend.
std::string curve_plot(const std::string& title, const std::string& x_label, const std::vector<Curve>& curves);

// Histogram of `values` with `bins` equal-width bins; a dashed line marks 0
// when it falls inside the range.
std::string histogram(const std::string& title, const std::vector<double>& values, std::size_t bins,
                      const std::string& color);

struct PanelPath {
    std::vector<std::array<double, 2>> points;
    std::size_t head = 0;
};

struct PanelMarker {
    std::array<double, 2> at{};
    std::string label;
};

struct Panel {
    std::string title;
    std::vector<PanelPath> paths;
    std::vector<PanelMarker> markers;  // objects or waypoints
    std::array<double, 2> start{};
};

// Grid of square panels over the box [lo, hi]^2, paths colored by head.
std::string trajectory_grid(const std::vector<Panel>& panels, std::size_t columns, double lo, double hi,
                            std::size_t heads);

}  // namespace grasp::report
