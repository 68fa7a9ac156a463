#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"
#include "rmvl/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>

namespace rmvl {
namespace {

// 5x7 glyphs, one byte per row, bit 4 is the leftmost column.
const std::map<char, std::array<uint8_t, 7>>& font() {
  static const std::map<char, std::array<uint8_t, 7>> glyphs = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}}, {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}}, {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}}, {' ', {0, 0, 0, 0, 0, 0, 0}},
  };
  return glyphs;
}

struct Canvas {
  Image8 img;

  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    auto* p = img.at(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  void line(double x0, double y0, double x1, double y1, uint8_t r, uint8_t g, uint8_t b, int thick = 1) {
    const int n = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= n; ++i) {
      const double u = static_cast<double>(i) / n;
      const int x = static_cast<int>(std::lround(x0 + u * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + u * (y1 - y0)));
      for (int dy = 0; dy < thick; ++dy) {
        for (int dx = 0; dx < thick; ++dx) set(x + dx - thick / 2, y + dy - thick / 2, r, g, b);
      }
    }
  }

  void text(int x, int y, const std::string& s, uint8_t shade = 0) {
    for (char ch : s) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      auto it = font().find(c);
      if (it != font().end()) {
        for (int row = 0; row < 7; ++row) {
          for (int col = 0; col < 5; ++col) {
            if (it->second[static_cast<size_t>(row)] & (0x10 >> col)) set(x + col, y + row, shade, shade, shade);
          }
        }
      }
      x += 6;
    }
  }
};

std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, std::abs(v) >= 100 ? "%.0f" : "%.1f", v);
  return buf;
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::vector<PlotSeries>& series, int width, int height) {
  if (series.empty()) throw ArgumentError("plot: no series");
  size_t n = 0;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n == 0) throw ArgumentError("plot: empty series");
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  Canvas c{make_image(width, height, 3, 255)};
  const int left = 56, right = width - 16, top = 28, bottom = height - 36;
  auto px = [&](double i) { return left + (n > 1 ? i / static_cast<double>(n - 1) : 0.5) * (right - left); };
  auto py = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };

  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    const double y = py(v);
    c.line(left, y, right, y, 225, 225, 225);
    c.text(4, static_cast<int>(y) - 3, format_tick(v), 60);
  }
  const int xticks = static_cast<int>(std::min<size_t>(n, 8));
  for (int t = 0; t < xticks; ++t) {
    const size_t i = xticks > 1 ? static_cast<size_t>(std::lround(static_cast<double>(t) * (n - 1) / (xticks - 1))) : 0;
    const double x = px(static_cast<double>(i));
    c.line(x, bottom, x, bottom + 4, 0, 0, 0);
    const std::string label = std::to_string(i + 1);
    c.text(static_cast<int>(x) - 3 * static_cast<int>(label.size()), bottom + 8, label, 60);
  }
  c.line(left, top, left, bottom, 0, 0, 0);
  c.line(left, bottom, right, bottom, 0, 0, 0);
  c.text(left, 10, title);
  c.text((left + right) / 2 - 24, height - 14, "TIMESTEP", 60);

  int legend_y = top + 6;
  for (const auto& s : series) {
    for (size_t i = 1; i < s.values.size(); ++i) {
      c.line(px(static_cast<double>(i - 1)), py(s.values[i - 1]), px(static_cast<double>(i)), py(s.values[i]),
             s.r, s.g, s.b, 2);
    }
    const int lx = right - 6 * static_cast<int>(s.label.size()) - 24;
    c.line(lx, legend_y + 3, lx + 14, legend_y + 3, s.r, s.g, s.b, 2);
    c.text(lx + 18, legend_y, s.label);
    legend_y += 12;
  }
  write_png(path, c.img);
}

}  // namespace rmvl
