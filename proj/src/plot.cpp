#include "aecl/plot.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace aecl::plot {

namespace {

using Glyph = std::array<std::uint8_t, 7>;

const Glyph* glyph(char ch) {
    static const std::array<Glyph, 10> digits{{
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
    }};
    static const std::array<Glyph, 26> letters{{
        {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
        {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
        {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
        {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
        {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
        {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
        {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
        {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
        {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
        {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
        {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
    }};
    static const std::array<std::pair<char, Glyph>, 10> marks{{
        {'.', {0, 0, 0, 0, 0, 0x0C, 0x0C}},
        {'-', {0, 0, 0, 0x1F, 0, 0, 0}},
        {'_', {0, 0, 0, 0, 0, 0, 0x1F}},
        {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
        {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {':', {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}},
        {'=', {0, 0, 0x1F, 0, 0x1F, 0, 0}},
        {',', {0, 0, 0, 0, 0x0C, 0x04, 0x08}},
        {'+', {0, 0x04, 0x04, 0x1F, 0x04, 0x04, 0}},
    }};
    if (ch >= '0' && ch <= '9') return &digits[static_cast<std::size_t>(ch - '0')];
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    if (ch >= 'A' && ch <= 'Z') return &letters[static_cast<std::size_t>(ch - 'A')];
    for (const auto& [c, g] : marks) {
        if (c == ch) return &g;
    }
    return nullptr;
}

constexpr std::array<Rgb, 6> kPalette{{
    {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {255, 127, 14}, {148, 103, 189}, {140, 86, 75}}};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{220, 220, 220};

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kLeft = 60;
constexpr int kRight = 20;
constexpr int kTop = 40;
constexpr int kBottom = 70;

std::string tick_label(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

struct Frame {
    double y_min, y_max;
    int plot_w() const { return kWidth - kLeft - kRight; }
    int plot_h() const { return kHeight - kTop - kBottom; }
    int y_px(double y) const {
        const double t = (std::clamp(y, y_min, y_max) - y_min) / (y_max - y_min);
        return kTop + plot_h() - static_cast<int>(std::lround(t * plot_h()));
    }
};

void draw_axes(Canvas& c, const Frame& f, const std::string& title) {
    c.text((kWidth - Canvas::text_width(title, 2)) / 2, 10, title, kBlack, 2);
    for (int i = 0; i <= 4; ++i) {
        const double v = f.y_min + (f.y_max - f.y_min) * i / 4.0;
        const int y = f.y_px(v);
        c.line(kLeft, y, kLeft + f.plot_w(), y, kGrid);
        const auto label = tick_label(v);
        c.text(kLeft - 6 - Canvas::text_width(label), y - 3, label, kBlack);
    }
    c.line(kLeft, kTop, kLeft, kTop + f.plot_h(), kBlack);
    c.line(kLeft, kTop + f.plot_h(), kLeft + f.plot_w(), kTop + f.plot_h(), kBlack);
}

void draw_legend(Canvas& c, const std::vector<std::string>& labels) {
    int x = kLeft;
    const int y = kHeight - 22;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Rgb col = kPalette[i % kPalette.size()];
        c.fill_rect(x, y, x + 10, y + 7, col);
        c.text(x + 14, y, labels[i], kBlack);
        x += 14 + Canvas::text_width(labels[i]) + 20;
    }
}

}  // namespace

Canvas::Canvas(int width, int height, Rgb background) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("canvas: size must be positive");
    rgb_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < rgb_.size(); i += 3) std::copy(background.begin(), background.end(), rgb_.begin() + static_cast<std::ptrdiff_t>(i));
}

Rgb Canvas::pixel(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("canvas: pixel outside");
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    return {rgb_[i], rgb_[i + 1], rgb_[i + 2]};
}

void Canvas::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    rgb_[i] = c[0];
    rgb_[i + 1] = c[1];
    rgb_[i + 2] = c[2];
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
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

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) set(x, y, c);
    }
}

void Canvas::text(int x, int y, const std::string& s, Rgb c, int scale) {
    for (char ch : s) {
        if (const Glyph* g = glyph(ch)) {
            for (int r = 0; r < 7; ++r) {
                for (int col = 0; col < 5; ++col) {
                    if ((*g)[static_cast<std::size_t>(r)] & (0x10 >> col)) {
                        fill_rect(x + col * scale, y + r * scale, x + (col + 1) * scale - 1, y + (r + 1) * scale - 1, c);
                    }
                }
            }
        }
        x += 6 * scale;
    }
}

int Canvas::text_width(const std::string& s, int scale) { return static_cast<int>(s.size()) * 6 * scale; }

void Canvas::write_png(const std::filesystem::path& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("png: cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height_; ++y) {
        png_write_row(png, rgb_.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void line_chart(const std::filesystem::path& path, const std::string& title, const std::vector<Series>& series,
                double y_min, double y_max) {
    if (!(y_max > y_min)) throw std::invalid_argument("line chart: empty y range");
    Canvas c(kWidth, kHeight);
    const Frame f{y_min, y_max};
    draw_axes(c, f, title);
    std::size_t n = 0;
    for (const auto& s : series) n = std::max(n, s.y.size());
    const double dx = n > 1 ? static_cast<double>(f.plot_w()) / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const Rgb col = kPalette[i % kPalette.size()];
        int px = -1, py = -1;
        for (std::size_t k = 0; k < series[i].y.size(); ++k) {
            const double v = series[i].y[k];
            if (!std::isfinite(v)) {
                px = -1;
                continue;
            }
            const int x = kLeft + static_cast<int>(std::lround(dx * static_cast<double>(k)));
            const int y = f.y_px(v);
            if (px >= 0) c.line(px, py, x, y, col);
            c.fill_rect(x - 1, y - 1, x + 1, y + 1, col);
            px = x;
            py = y;
        }
    }
    const auto last = std::to_string(n == 0 ? 0 : n - 1);
    c.text(kLeft, kTop + f.plot_h() + 6, "0", kBlack);
    c.text(kLeft + f.plot_w() - Canvas::text_width(last), kTop + f.plot_h() + 6, last, kBlack);
    std::vector<std::string> labels;
    for (const auto& s : series) labels.push_back(s.label);
    draw_legend(c, labels);
    c.write_png(path);
}

void bar_chart(const std::filesystem::path& path, const std::string& title, const std::vector<std::string>& groups,
               const std::vector<std::string>& series, const std::vector<std::vector<double>>& values,
               const std::vector<std::vector<double>>& errors) {
    if (values.size() != series.size()) throw std::invalid_argument("bar chart: one value row per series");
    Canvas c(kWidth, kHeight);
    const Frame f{0.0, 1.0};
    draw_axes(c, f, title);
    if (!groups.empty() && !series.empty()) {
        const int group_w = f.plot_w() / static_cast<int>(groups.size());
        const int bar_w = std::max(2, (group_w - 20) / static_cast<int>(series.size()));
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const int gx = kLeft + static_cast<int>(g) * group_w + 10;
            for (std::size_t s = 0; s < series.size(); ++s) {
                if (values[s].size() != groups.size()) throw std::invalid_argument("bar chart: one value per group");
                const double v = values[s][g];
                if (!std::isfinite(v)) continue;
                const int x0 = gx + static_cast<int>(s) * bar_w;
                c.fill_rect(x0, f.y_px(v), x0 + bar_w - 2, f.y_px(0.0), kPalette[s % kPalette.size()]);
                if (s < errors.size() && g < errors[s].size() && errors[s][g] > 0.0) {
                    const int xm = x0 + bar_w / 2;
                    const int ylo = f.y_px(v - errors[s][g]), yhi = f.y_px(v + errors[s][g]);
                    c.line(xm, ylo, xm, yhi, kBlack);
                    c.line(xm - 3, ylo, xm + 3, ylo, kBlack);
                    c.line(xm - 3, yhi, xm + 3, yhi, kBlack);
                }
            }
            c.text(gx + (group_w - 20 - Canvas::text_width(groups[g])) / 2, kTop + f.plot_h() + 6, groups[g], kBlack);
        }
    }
    draw_legend(c, series);
    c.write_png(path);
}

}  // namespace aecl::plot
