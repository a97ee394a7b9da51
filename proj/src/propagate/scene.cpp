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

#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace radiomap {

namespace {

// One face between cells `hi_cell` (footprint, taller) and `lo_cell`.
struct Face {
  bool wall = false;
  int facing = 0;
  float top = 0.0f, base = 0.0f;
};

Face face_between(const ElevationGrid& g, const std::vector<std::uint8_t>& fp, int ia, int ja, int ib, int jb) {
  // a is the cell at the smaller coordinate, b at the larger
  const float ha = g.at(ia, ja), hb = g.at(ib, jb);
  const bool fa = fp[static_cast<std::size_t>(ja) * g.width_px() + ia] != 0;
  const bool fb = fp[static_cast<std::size_t>(jb) * g.width_px() + ib] != 0;
  if (fa && ha > hb) return {true, +1, ha, hb};
  if (fb && hb > ha) return {true, -1, hb, ha};
  return {};
}

}  // namespace

Scene::Scene(ElevationGrid grid) : grid_(std::move(grid)), footprint_(grid_.footprint_mask()) {
  const int w = grid_.width_px(), h = grid_.height_px();
  vface_.assign(static_cast<std::size_t>(w + 1) * h, -1);
  hface_.assign(static_cast<std::size_t>(w) * (h + 1), -1);

  auto emit = [&](int axis, int line, int lo, int hi, const Face& f) {
    const int id = static_cast<int>(grid_walls_.size());
    grid_walls_.push_back({axis, line, lo, hi, f.facing, static_cast<double>(f.top), static_cast<double>(f.base)});
    for (int k = lo; k < hi; ++k) {
      if (axis == 0) vface_[static_cast<std::size_t>(k) * (w + 1) + line] = id;
      else hface_[static_cast<std::size_t>(line) * w + k] = id;
    }
  };

  // Vertical faces on x = i, merged along y.
  for (int i = 1; i < w; ++i) {
    int run_start = -1;
    Face run{};
    for (int j = 0; j <= h; ++j) {
      const Face f = j < h ? face_between(grid_, footprint_, i - 1, j, i, j) : Face{};
      const bool same = run_start >= 0 && f.wall && f.facing == run.facing && f.top == run.top && f.base == run.base;
      if (same) continue;
      if (run_start >= 0) emit(0, i, run_start, j, run);
      run_start = f.wall ? j : -1;
      run = f;
    }
  }
  // Horizontal faces on y = j, merged along x.
  for (int j = 1; j < h; ++j) {
    int run_start = -1;
    Face run{};
    for (int i = 0; i <= w; ++i) {
      const Face f = i < w ? face_between(grid_, footprint_, i, j - 1, i, j) : Face{};
      const bool same = run_start >= 0 && f.wall && f.facing == run.facing && f.top == run.top && f.base == run.base;
      if (same) continue;
      if (run_start >= 0) emit(1, j, run_start, i, run);
      run_start = f.wall ? i : -1;
      run = f;
    }
  }

  const double res = grid_.resolution_m();
  const Point2 o = grid_.origin();
  walls_.reserve(grid_walls_.size());
  for (const auto& gw : grid_walls_) {
    WallSegment s;
    if (gw.axis == 0) {
      s.a = {o.x + gw.line * res, o.y + gw.lo * res};
      s.b = {o.x + gw.line * res, o.y + gw.hi * res};
      s.normal = {static_cast<double>(gw.facing), 0.0};
    } else {
      s.a = {o.x + gw.lo * res, o.y + gw.line * res};
      s.b = {o.x + gw.hi * res, o.y + gw.line * res};
      s.normal = {0.0, static_cast<double>(gw.facing)};
    }
    s.top_height_m = gw.top;
    s.base_height_m = gw.base;
    walls_.push_back(s);
  }
}

std::vector<WallSegment> extract_walls(const ElevationGrid& grid) {
  const Scene scene(grid);
  return {scene.walls().begin(), scene.walls().end()};
}

// ---------------------------------------------------------------------------

namespace detail {

bool segment_clear(const ElevationGrid& grid, Vec2 off, Vec2 p, double zp, Vec2 q, double zq) {
  const double dz = zq - zp;
  auto z_at = [&](double t) { return zp + dz * t; };
  auto blocks = [&](int i, int j, double zmin) { return grid.in_bounds(i, j) && !(grid.at(i, j) < zmin); };
  return walk_segment(
      off, p, q, [&](int i, int j, double t0, double t1) { return !blocks(i, j, std::min(z_at(t0), z_at(t1))); },
      [&](int i, int j, double t) { return !blocks(i, j, z_at(t)); });
}

}  // namespace detail

bool los_visible(const ElevationGrid& grid, Point3 a, Point3 b) {
  const double res = grid.resolution_m();
  const Point2 o = grid.origin();
  const detail::Vec2 p{(a.x - o.x) / res, (a.y - o.y) / res};
  const detail::Vec2 q{(b.x - o.x) / res, (b.y - o.y) / res};
  return detail::segment_clear(grid, {0.0, 0.0}, p, a.z, q, b.z);
}

}  // namespace radiomap
