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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace radiomap::cli {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kGrid{225, 225, 225};

/// Categorical palette for series.
Rgb series_color(std::size_t i);
/// Perceptually ordered colormap, t in [0, 1].
Rgb colormap(double t);

class Canvas {
 public:
  Canvas(int width, int height, Rgb background = kWhite);
  int width() const { return width_; }
  int height() const { return height_; }

  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
  void line(double x0, double y0, double x1, double y1, Rgb c, int thickness = 1);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void dot(double x, double y, int radius, Rgb c);
  /// 5x7 bitmap font; unknown glyphs render as blanks.
  void text(int x, int y, const std::string& s, Rgb c, int scale = 1);
  static int text_width(const std::string& s, int scale = 1) { return static_cast<int>(s.size()) * 6 * scale; }
  void save_png(const std::filesystem::path& path) const;

 private:
  int width_, height_;
  std::vector<std::uint8_t> rgb_;
};

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool lines = true;  // false: scatter
  bool step = false;  // ECDF staircase
};

struct PlotSpec {
  std::string title;
  std::string x_label, y_label;
  std::vector<Series> series;
};

/// Axes with ticks, labels and a legend, drawn into the given region.
void draw_plot(Canvas& canvas, int x0, int y0, int width, int height, const PlotSpec& spec);
/// One plot per panel in a row.
void render_plots(const std::filesystem::path& path, std::span<const PlotSpec> panels, int panel_width = 480,
                  int panel_height = 360);

struct Heatmap {
  std::string title;
  int width = 0, height = 0;
  std::vector<float> values;  // row-major, row 0 drawn at the bottom
  bool grayscale = false;
};

/// Panels side by side; non-grayscale panels share [lo, hi] and one colorbar.
void render_heatmaps(const std::filesystem::path& path, std::span<const Heatmap> panels, double lo, double hi,
                     const std::string& colorbar_label, int cell_px = 4);

}  // namespace radiomap::cli
