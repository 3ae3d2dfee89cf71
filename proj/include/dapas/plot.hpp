#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace dapas {

struct PlotColor {
    unsigned char r = 0, g = 0, b = 0;
};

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (epsilon, ratio in %)
    PlotColor color;
};

/// Renders ratio-vs-epsilon curves to a PNG: x log-scaled with ticks at the
/// given epsilons, y in percent from 0 to 100. Lowercase 5x7 bitmap labels.
void render_ratio_plot(const std::filesystem::path& path, const std::string& title,
                       const std::vector<PlotSeries>& series, const std::vector<double>& x_ticks);

}  // namespace dapas
