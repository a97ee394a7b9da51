// SPDX-License-Identifier: Apache-2.0
//
// radiomap - elevation-driven radio map learning pipeline
// Copyright (C) 2026 The radiomap authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace radiomap::cli {
namespace {

// Columns of 7 pixels, bit 0 at the top; ASCII 0x20..0x7e.
constexpr std::uint8_t kFont[95][5] = {
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5f, 0x00, 0x00}, {0x00, 0x07, 0x00, 0x07, 0x00},
    {0x14, 0x7f, 0x14, 0x7f, 0x14}, {0x24, 0x2a, 0x7f, 0x2a, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00}, {0x00, 0x1c, 0x22, 0x41, 0x00},
    {0x00, 0x41, 0x22, 0x1c, 0x00}, {0x14, 0x08, 0x3e, 0x08, 0x14}, {0x08, 0x08, 0x3e, 0x08, 0x08},
    {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08}, {0x00, 0x60, 0x60, 0x00, 0x00},
    {0x20, 0x10, 0x08, 0x04, 0x02}, {0x3e, 0x51, 0x49, 0x45, 0x3e}, {0x00, 0x42, 0x7f, 0x40, 0x00},
    {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4b, 0x31}, {0x18, 0x14, 0x12, 0x7f, 0x10},
    {0x27, 0x45, 0x45, 0x45, 0x39}, {0x3c, 0x4a, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1e}, {0x00, 0x36, 0x36, 0x00, 0x00},
    {0x00, 0x56, 0x36, 0x00, 0x00}, {0x08, 0x14, 0x22, 0x41, 0x00}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x00, 0x41, 0x22, 0x14, 0x08}, {0x02, 0x01, 0x51, 0x09, 0x06}, {0x32, 0x49, 0x79, 0x41, 0x3e},
    {0x7e, 0x11, 0x11, 0x11, 0x7e}, {0x7f, 0x49, 0x49, 0x49, 0x36}, {0x3e, 0x41, 0x41, 0x41, 0x22},
    {0x7f, 0x41, 0x41, 0x22, 0x1c}, {0x7f, 0x49, 0x49, 0x49, 0x41}, {0x7f, 0x09, 0x09, 0x09, 0x01},
    {0x3e, 0x41, 0x49, 0x49, 0x7a}, {0x7f, 0x08, 0x08, 0x08, 0x7f}, {0x00, 0x41, 0x7f, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3f, 0x01}, {0x7f, 0x08, 0x14, 0x22, 0x41}, {0x7f, 0x40, 0x40, 0x40, 0x40},
    {0x7f, 0x02, 0x0c, 0x02, 0x7f}, {0x7f, 0x04, 0x08, 0x10, 0x7f}, {0x3e, 0x41, 0x41, 0x41, 0x3e},
    {0x7f, 0x09, 0x09, 0x09, 0x06}, {0x3e, 0x41, 0x51, 0x21, 0x5e}, {0x7f, 0x09, 0x19, 0x29, 0x46},
    {0x46, 0x49, 0x49, 0x49, 0x31}, {0x01, 0x01, 0x7f, 0x01, 0x01}, {0x3f, 0x40, 0x40, 0x40, 0x3f},
    {0x1f, 0x20, 0x40, 0x20, 0x1f}, {0x3f, 0x40, 0x38, 0x40, 0x3f}, {0x63, 0x14, 0x08, 0x14, 0x63},
    {0x07, 0x08, 0x70, 0x08, 0x07}, {0x61, 0x51, 0x49, 0x45, 0x43}, {0x00, 0x7f, 0x41, 0x41, 0x00},
    {0x02, 0x04, 0x08, 0x10, 0x20}, {0x00, 0x41, 0x41, 0x7f, 0x00}, {0x04, 0x02, 0x01, 0x02, 0x04},
    {0x40, 0x40, 0x40, 0x40, 0x40}, {0x00, 0x01, 0x02, 0x04, 0x00}, {0x20, 0x54, 0x54, 0x54, 0x78},
    {0x7f, 0x48, 0x44, 0x44, 0x38}, {0x38, 0x44, 0x44, 0x44, 0x20}, {0x38, 0x44, 0x44, 0x48, 0x7f},
    {0x38, 0x54, 0x54, 0x54, 0x18}, {0x08, 0x7e, 0x09, 0x01, 0x02}, {0x0c, 0x52, 0x52, 0x52, 0x3e},
    {0x7f, 0x08, 0x04, 0x04, 0x78}, {0x00, 0x44, 0x7d, 0x40, 0x00}, {0x20, 0x40, 0x44, 0x3d, 0x00},
    {0x7f, 0x10, 0x28, 0x44, 0x00}, {0x00, 0x41, 0x7f, 0x40, 0x00}, {0x7c, 0x04, 0x18, 0x04, 0x78},
    {0x7c, 0x08, 0x04, 0x04, 0x78}, {0x38, 0x44, 0x44, 0x44, 0x38}, {0x7c, 0x14, 0x14, 0x14, 0x08},
    {0x08, 0x14, 0x14, 0x18, 0x7c}, {0x7c, 0x08, 0x04, 0x04, 0x08}, {0x48, 0x54, 0x54, 0x54, 0x20},
    {0x04, 0x3f, 0x44, 0x40, 0x20}, {0x3c, 0x40, 0x40, 0x20, 0x7c}, {0x1c, 0x20, 0x40, 0x20, 0x1c},
    {0x3c, 0x40, 0x30, 0x40, 0x3c}, {0x44, 0x28, 0x10, 0x28, 0x44}, {0x0c, 0x50, 0x50, 0x50, 0x3c},
    {0x44, 0x64, 0x54, 0x4c, 0x44}, {0x00, 0x08, 0x36, 0x41, 0x00}, {0x00, 0x00, 0x7f, 0x00, 0x00},
    {0x00, 0x41, 0x36, 0x08, 0x00}, {0x08, 0x04, 0x08, 0x10, 0x08}};

constexpr Rgb kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                            {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};

// Samples of a viridis-like ramp.
constexpr Rgb kRamp[] = {{68, 1, 84},    {72, 40, 120},  {62, 74, 137},  {49, 104, 142}, {38, 130, 142},
                         {31, 158, 137}, {53, 183, 121}, {109, 205, 89}, {180, 222, 44}, {253, 231, 37}};

std::string tick_label(double v, double step) {
  if (std::abs(v) < step * 1e-9) v = 0.0;
  char buf[32];
  const double a = std::max(std::abs(v), step);
  if (a >= 1e5 || a < 1e-3) std::snprintf(buf, sizeof buf, "%.2g", v);
  else {
    const int decimals = std::max(0, -static_cast<int>(std::floor(std::log10(step) + 1e-9)));
    std::snprintf(buf, sizeof buf, "%.*f", std::min(decimals, 4), v);
  }
  return buf;
}

double nice_step(double range, int target) {
  const double raw = range / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

Rgb series_color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

Rgb colormap(double t) {
  if (!std::isfinite(t)) return {200, 200, 200};
  t = std::clamp(t, 0.0, 1.0) * (std::size(kRamp) - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(t), std::size(kRamp) - 2);
  const double f = t - static_cast<double>(k);
  Rgb c;
  for (int ch = 0; ch < 3; ++ch)
    c[ch] = static_cast<std::uint8_t>(std::lround(kRamp[k][ch] * (1.0 - f) + kRamp[k + 1][ch] * f));
  return c;
}

Canvas::Canvas(int width, int height, Rgb background) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("canvas size must be positive");
  rgb_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t k = 0; k < rgb_.size(); k += 3) std::copy(background.begin(), background.end(), rgb_.begin() + k);
}

void Canvas::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  std::copy(c.begin(), c.end(), rgb_.begin() + (static_cast<std::size_t>(y) * width_ + x) * 3);
}

Rgb Canvas::get(int x, int y) const {
  const auto k = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {rgb_[k], rgb_[k + 1], rgb_[k + 2]};
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c, int thickness) {
  const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  const int n = std::max(1, static_cast<int>(std::ceil(len)));
  const int r = thickness / 2;
  for (int s = 0; s <= n; ++s) {
    const double t = static_cast<double>(s) / n;
    const int x = static_cast<int>(std::lround(x0 + (x1 - x0) * t));
    const int y = static_cast<int>(std::lround(y0 + (y1 - y0) * t));
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) set(x + dx, y + dy, c);
  }
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(y0, 0); y < std::min(y1, height_); ++y)
    for (int x = std::max(x0, 0); x < std::min(x1, width_); ++x) set(x, y, c);
}

void Canvas::dot(double x, double y, int radius, Rgb c) {
  const int cx = static_cast<int>(std::lround(x)), cy = static_cast<int>(std::lround(y));
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) set(cx + dx, cy + dy, c);
}

void Canvas::text(int x, int y, const std::string& s, Rgb c, int scale) {
  for (std::size_t n = 0; n < s.size(); ++n) {
    const int ch = static_cast<unsigned char>(s[n]);
    if (ch < 0x20 || ch > 0x7e) continue;
    const auto& glyph = kFont[ch - 0x20];
    for (int col = 0; col < 5; ++col)
      for (int row = 0; row < 7; ++row)
        if (glyph[col] >> row & 1)
          fill_rect(x + (static_cast<int>(n) * 6 + col) * scale, y + row * scale,
                    x + (static_cast<int>(n) * 6 + col + 1) * scale, y + (row + 1) * scale, c);
  }
}

void Canvas::save_png(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width_, height_, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height_; ++y)
    png_write_row(png, const_cast<png_bytep>(rgb_.data() + static_cast<std::size_t>(y) * width_ * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void draw_plot(Canvas& canvas, int x0, int y0, int width, int height, const PlotSpec& spec) {
  const int left = x0 + 64, right = x0 + width - 12, top = y0 + 28, bottom = y0 + height - 40;
  Range rx, ry;
  for (const auto& s : spec.series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.finish();
  ry.finish();
  const double xs = nice_step(rx.hi - rx.lo, 6), ys = nice_step(ry.hi - ry.lo, 5);
  const double xlo = std::floor(rx.lo / xs) * xs, xhi = std::ceil(rx.hi / xs) * xs;
  const double ylo = std::floor(ry.lo / ys) * ys, yhi = std::ceil(ry.hi / ys) * ys;
  auto px = [&](double v) { return left + (v - xlo) / (xhi - xlo) * (right - left); };
  auto py = [&](double v) { return bottom - (v - ylo) / (yhi - ylo) * (bottom - top); };

  for (double v = xlo; v <= xhi + xs * 1e-6; v += xs) {
    const double x = px(v);
    canvas.line(x, top, x, bottom, kGrid);
    const auto l = tick_label(v, xs);
    canvas.text(static_cast<int>(x) - Canvas::text_width(l) / 2, bottom + 6, l, kBlack);
  }
  for (double v = ylo; v <= yhi + ys * 1e-6; v += ys) {
    const double y = py(v);
    canvas.line(left, y, right, y, kGrid);
    const auto l = tick_label(v, ys);
    canvas.text(left - 6 - Canvas::text_width(l), static_cast<int>(y) - 3, l, kBlack);
  }
  canvas.line(left, bottom, right, bottom, kBlack);
  canvas.line(left, top, left, bottom, kBlack);
  canvas.text(x0 + (width - Canvas::text_width(spec.title, 2)) / 2, y0 + 6, spec.title, kBlack, 2);
  canvas.text((left + right - Canvas::text_width(spec.x_label)) / 2, bottom + 22, spec.x_label, kBlack);
  canvas.text(x0 + 4, top - 12, spec.y_label, kBlack);

  const bool ecdf = !spec.series.empty() &&
                    std::all_of(spec.series.begin(), spec.series.end(), [](const Series& s) { return s.step; });
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const Rgb c = series_color(k);
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!s.lines) {
        canvas.dot(px(s.x[i]), py(s.y[i]), 1, c);
        continue;
      }
      if (i + 1 < n && std::isfinite(s.x[i + 1]) && std::isfinite(s.y[i + 1])) {
        if (s.step) {
          canvas.line(px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i]), c, 2);
          canvas.line(px(s.x[i + 1]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), c, 2);
        } else {
          canvas.line(px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), c, 2);
        }
      }
      if (n == 1) canvas.dot(px(s.x[i]), py(s.y[i]), 2, c);
    }
    if (!s.label.empty()) {
      const int ly = (ecdf ? bottom - 6 - static_cast<int>(spec.series.size()) * 12 : top + 6) + static_cast<int>(k) * 12;
      const int lx = right - 8 - Canvas::text_width(s.label) - 16;
      canvas.fill_rect(lx, ly + 2, lx + 12, ly + 5, c);
      canvas.text(lx + 16, ly, s.label, kBlack);
    }
  }
}

void render_plots(const std::filesystem::path& path, std::span<const PlotSpec> panels, int panel_width,
                  int panel_height) {
  if (panels.empty()) throw std::invalid_argument("nothing to plot");
  Canvas canvas(panel_width * static_cast<int>(panels.size()), panel_height);
  for (std::size_t k = 0; k < panels.size(); ++k)
    draw_plot(canvas, static_cast<int>(k) * panel_width, 0, panel_width, panel_height, panels[k]);
  canvas.save_png(path);
}

void render_heatmaps(const std::filesystem::path& path, std::span<const Heatmap> panels, double lo, double hi,
                     const std::string& colorbar_label, int cell_px) {
  if (panels.empty()) throw std::invalid_argument("nothing to plot");
  if (!(hi > lo)) throw std::invalid_argument("heatmap range must be increasing");
  int max_w = 0, max_h = 0;
  for (const auto& p : panels) {
    if (p.values.size() != static_cast<std::size_t>(p.width) * p.height)
      throw std::invalid_argument("heatmap '" + p.title + "' has the wrong number of values");
    max_w = std::max(max_w, p.width * cell_px);
    max_h = std::max(max_h, p.height * cell_px);
  }
  const int pad = 16, title_h = 24, bar_w = 90;
  Canvas canvas(pad + static_cast<int>(panels.size()) * (max_w + pad) + bar_w, max_h + title_h + 2 * pad);
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& p = panels[k];
    const int ox = pad + static_cast<int>(k) * (max_w + pad), oy = title_h + pad;
    canvas.text(ox, pad / 2, p.title, kBlack, 2);
    float plo = 0.0f, phi = 1.0f;
    if (p.grayscale && !p.values.empty()) {
      const auto [a, b] = std::minmax_element(p.values.begin(), p.values.end());
      plo = *a;
      phi = *b > *a ? *b : *a + 1.0f;
    }
    for (int j = 0; j < p.height; ++j)
      for (int i = 0; i < p.width; ++i) {
        const float v = p.values[static_cast<std::size_t>(j) * p.width + i];
        Rgb c;
        if (p.grayscale) {
          const auto g = static_cast<std::uint8_t>(std::lround(255.0 * (v - plo) / (phi - plo)));
          c = {g, g, g};
        } else {
          c = colormap((v - lo) / (hi - lo));
        }
        const int y = oy + (p.height - 1 - j) * cell_px;
        canvas.fill_rect(ox + i * cell_px, y, ox + (i + 1) * cell_px, y + cell_px, c);
      }
  }
  const int bx = canvas.width() - bar_w + 8, by = title_h + pad;
  for (int y = 0; y < max_h; ++y) canvas.fill_rect(bx, by + y, bx + 16, by + y + 1, colormap(1.0 - static_cast<double>(y) / (max_h - 1)));
  const double step = nice_step(hi - lo, 5);
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9; v += step) {
    const int y = by + static_cast<int>(std::lround((hi - v) / (hi - lo) * (max_h - 1)));
    canvas.line(bx + 16, y, bx + 20, y, kBlack);
    canvas.text(bx + 22, y - 3, tick_label(v, step), kBlack);
  }
  canvas.text(bx - 4, pad / 2, colorbar_label, kBlack);
  canvas.save_png(path);
}

}  // namespace radiomap::cli
