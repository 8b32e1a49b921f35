#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace flexpos::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    double width = 1.2;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    bool log_x = false;
    bool equal_aspect = false;
};

/// Panels stacked vertically in one self-contained SVG document.
std::string render(const std::vector<Panel>& panels, double width = 760.0, double panel_height = 260.0);

void write(const std::vector<Panel>& panels, const std::filesystem::path& path);

/// Evenly strided subset keeping at most `max_points` (always includes the last point).
std::vector<std::size_t> decimate(std::size_t n, std::size_t max_points);

}  // namespace flexpos::svg
