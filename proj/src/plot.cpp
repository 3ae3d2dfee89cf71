#include "dapas/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "dapas/image_io.hpp"

namespace dapas {

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost pixel. Lowercase, digits
// and the handful of symbols the plot labels need.
const std::map<char, std::array<unsigned char, 7>>& font5x7() {
    static const std::map<char, std::array<unsigned char, 7>> font = {
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
        {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
        {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
        {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
        {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
        {'%', {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
        {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
        {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
        {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
        {'b', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x1E}},
        {'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
        {'d', {0x01, 0x01, 0x0F, 0x11, 0x11, 0x11, 0x0F}},
        {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
        {'f', {0x06, 0x08, 0x1C, 0x08, 0x08, 0x08, 0x08}},
        {'g', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
        {'h', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x11}},
        {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
        {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C}},
        {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
        {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x15}},
        {'n', {0x00, 0x00, 0x1E, 0x11, 0x11, 0x11, 0x11}},
        {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
        {'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
        {'q', {0x00, 0x00, 0x0F, 0x11, 0x0F, 0x01, 0x01}},
        {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
        {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
        {'t', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
        {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D}},
        {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'w', {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A}},
        {'x', {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11}},
        {'y', {0x00, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'z', {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}},
    };
    return font;
}

class Canvas {
public:
    Canvas(int w, int h) : w_(w), h_(h) {
        img_.w = w;
        img_.h = h;
        img_.channels = 3;
        img_.pixels.assign(static_cast<std::size_t>(w) * h * 3, 255);
    }

    void set(int x, int y, PlotColor c) {
        if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
        const std::size_t i = (static_cast<std::size_t>(y) * w_ + x) * 3;
        img_.pixels[i] = c.r;
        img_.pixels[i + 1] = c.g;
        img_.pixels[i + 2] = c.b;
    }

    void line(int x0, int y0, int x1, int y1, PlotColor c) {
        const int dx = std::abs(x1 - x0);
        const int dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1;
        const int sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void marker(int x, int y, PlotColor c) {
        for (int dy = -2; dy <= 2; ++dy) {
            for (int dx = -2; dx <= 2; ++dx) set(x + dx, y + dy, c);
        }
    }

    void text(int x, int y, const std::string& s, PlotColor c) {
        const auto& font = font5x7();
        for (char raw : s) {
            const char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
            const auto it = font.find(ch);
            if (it != font.end()) {
                for (int row = 0; row < 7; ++row) {
                    for (int col = 0; col < 5; ++col) {
                        if (it->second[row] & (1 << (4 - col))) set(x + col, y + row, c);
                    }
                }
            }
            x += 6;
        }
    }

    void save(const std::filesystem::path& path) const { write_png(path, img_); }

private:
    int w_, h_;
    RawImage img_;
};

std::string format_eps(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", eps);
    return buf;
}

}  // namespace

void render_ratio_plot(const std::filesystem::path& path, const std::string& title,
                       const std::vector<PlotSeries>& series,
                       const std::vector<double>& x_ticks) {
    if (series.empty() || x_ticks.empty()) {
        throw std::invalid_argument("render_ratio_plot: nothing to plot");
    }
    const int width = 640, height = 480;
    const int ml = 60, mr = 20, mt = 36, mb = 46;
    Canvas canvas(width, height);

    const double x_lo = std::log10(*std::min_element(x_ticks.begin(), x_ticks.end()));
    const double x_hi = std::log10(*std::max_element(x_ticks.begin(), x_ticks.end()));
    const auto px = [&](double eps) {
        const double t = x_hi > x_lo ? (std::log10(eps) - x_lo) / (x_hi - x_lo) : 0.5;
        return ml + static_cast<int>(t * (width - ml - mr));
    };
    const auto py = [&](double pct) {
        const double t = std::min(std::max(pct, 0.0), 100.0) / 100.0;
        return height - mb - static_cast<int>(t * (height - mt - mb));
    };

    const PlotColor black{0, 0, 0};
    const PlotColor grid{215, 215, 215};

    for (int pct = 0; pct <= 100; pct += 20) {
        canvas.line(ml, py(pct), width - mr, py(pct), grid);
        canvas.text(ml - 30, py(pct) - 3, std::to_string(pct), black);
    }
    for (double eps : x_ticks) {
        canvas.line(px(eps), mt, px(eps), height - mb, grid);
        const std::string label = format_eps(eps);
        canvas.text(px(eps) - static_cast<int>(label.size()) * 3, height - mb + 6, label, black);
    }
    canvas.line(ml, height - mb, width - mr, height - mb, black);
    canvas.line(ml, mt, ml, height - mb, black);
    canvas.text(ml, 12, title, black);
    canvas.text(width / 2 - 20, height - 16, "epsilon", black);
    canvas.text(6, mt - 14, "ratio %", black);

    int legend_y = mt + 8;
    for (const PlotSeries& s : series) {
        for (std::size_t i = 0; i + 1 < s.points.size(); ++i) {
            canvas.line(px(s.points[i].first), py(s.points[i].second),
                        px(s.points[i + 1].first), py(s.points[i + 1].second), s.color);
        }
        for (const auto& [eps, pct] : s.points) canvas.marker(px(eps), py(pct), s.color);
        canvas.marker(width - mr - 130, legend_y + 3, s.color);
        canvas.text(width - mr - 120, legend_y, s.label, black);
        legend_y += 14;
    }
    canvas.save(path);
}

}  // namespace dapas
