#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aecl::plot {

using Rgb = std::array<std::uint8_t, 3>;

/// RGB raster with just enough drawing for charts.
class Canvas {
public:
    Canvas(int width, int height, Rgb background = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }
    Rgb pixel(int x, int y) const;

    void set(int x, int y, Rgb c);
    void line(int x0, int y0, int x1, int y1, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
    /// 5x7 bitmap glyphs; lowercase is drawn as uppercase, unknown characters as blanks.
    void text(int x, int y, const std::string& s, Rgb c, int scale = 1);
    static int text_width(const std::string& s, int scale = 1);

    void write_png(const std::filesystem::path& path) const;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> rgb_;
};

struct Series {
    std::string label;
    std::vector<double> y;  // x is the index
};

void line_chart(const std::filesystem::path& path, const std::string& title, const std::vector<Series>& series,
                double y_min, double y_max);

/// Grouped bars: values[s][g] for series s in group g, with optional error bars.
void bar_chart(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& groups,
               const std::vector<std::string>& series, const std::vector<std::vector<double>>& values,
               const std::vector<std::vector<double>>& errors);

}  // namespace aecl::plot
