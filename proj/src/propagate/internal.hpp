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

#include <cmath>
#include <limits>
#include <vector>

#include "radiomap/propagate.hpp"

namespace radiomap::detail {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double length(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }

/// Snaps a coordinate in cell units onto the half-cell lattice when it is
/// within rounding noise of it, so cell-center positions stay exact.
inline double snap_half(double u) {
  const double r = std::round(2.0 * u) * 0.5;
  return std::abs(u - r) < 1e-7 ? r : u;
}

/// Walks the cells crossed by the segment p -> q (supercover). Coordinates
/// are in cell units relative to `off`: absolute cell coordinate = rel + off.
/// on_cell(i, j, t0, t1) is called for every cell traversed over [t0, t1];
/// on_corner(i, j, t) for the two side cells when the segment passes exactly
/// through a lattice corner. Either callback returns false to stop early.
/// Returns false iff a callback stopped the walk.
template <class OnCell, class OnCorner>
bool walk_segment(Vec2 off, Vec2 p, Vec2 q, OnCell&& on_cell, OnCorner&& on_corner) {
  const double dx = q.x - p.x, dy = q.y - p.y;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);

  // Start cell; a point on a cell boundary belongs to the side the segment
  // moves into. Motion along a boundary touches both sides.
  // The cell is settled by exact comparisons against the relative boundary
  // positions k - o, so mirrored frames agree even next to lattice corners.
  auto start = [](double pv, double o, int s, bool& on_line) {
    int k = static_cast<int>(std::floor(pv + o));
    while (k - o > pv) --k;
    while (k + 1 - o <= pv) ++k;
    on_line = k - o == pv;
    return on_line && s < 0 ? k - 1 : k;
  };
  bool line_x = false, line_y = false;
  int cx = start(p.x, off.x, sx, line_x);
  int cy = start(p.y, off.y, sy, line_y);
  const bool dual_x = line_x && sx == 0;
  const bool dual_y = line_y && sy == 0;

  // Boundary crossings strictly inside the segment, in walking order.
  auto crossings = [](double pv, double qv, double o, int s, std::vector<double>& ts) {
    ts.clear();
    if (s == 0) return;
    const double lo = std::min(pv, qv), hi = std::max(pv, qv);
    const int k0 = static_cast<int>(std::floor(lo + o)) - 1;
    const int k1 = static_cast<int>(std::ceil(hi + o)) + 1;
    const double d = qv - pv;
    for (int k = k0; k <= k1; ++k) {
      const double b = k - o;
      if (b > lo && b < hi) ts.push_back((b - pv) / d);
    }
    if (s < 0) std::reverse(ts.begin(), ts.end());
  };
  thread_local std::vector<double> tx, ty;
  crossings(p.x, q.x, off.x, sx, tx);
  crossings(p.y, q.y, off.y, sy, ty);

  auto visit = [&](int i, int j, double t0, double t1) {
    if (!on_cell(i, j, t0, t1)) return false;
    if (dual_x && !on_cell(i - 1, j, t0, t1)) return false;
    if (dual_y && !on_cell(i, j - 1, t0, t1)) return false;
    return true;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::size_t ix = 0, iy = 0;
  double t_prev = 0.0;
  for (;;) {
    const double tnx = ix < tx.size() ? tx[ix] : inf;
    const double tny = iy < ty.size() ? ty[iy] : inf;
    const double tn = std::min(tnx, tny);
    if (tn == inf) return visit(cx, cy, t_prev, 1.0);
    if (!visit(cx, cy, t_prev, tn)) return false;
    if (tnx == tny) {
      if (!on_corner(cx + sx, cy, tn) || !on_corner(cx, cy + sy, tn)) return false;
      cx += sx;
      cy += sy;
      ++ix;
      ++iy;
    } else if (tnx < tny) {
      cx += sx;
      ++ix;
    } else {
      cy += sy;
      ++iy;
    }
    t_prev = tn;
  }
}

/// Clear-path test for the segment (p, zp) -> (q, zq) in relative cell units.
bool segment_clear(const ElevationGrid& grid, Vec2 off, Vec2 p, double zp, Vec2 q, double zq);

}  // namespace radiomap::detail
