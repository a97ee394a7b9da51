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
#include <stdexcept>

#include "radiomap/random.hpp"
#include "radiomap/raster.hpp"

namespace radiomap {

void CityParams::validate() const {
  if (width_px <= 0 || height_px <= 0) throw std::invalid_argument("city grid size must be positive");
  if (!(resolution_m > 0.0)) throw std::invalid_argument("city resolution must be positive");
  if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("city density must lie in [0, 1]");
  if (height_lo_m > height_hi_m) throw std::invalid_argument("city height range is inverted (h_lo > h_hi)");
  if (height_lo_m < 0.0) throw std::invalid_argument("city heights must be non-negative");
  if (!(street_spacing_m > street_width_m) || street_width_m < 0.0)
    throw std::invalid_argument("street spacing must exceed street width");
  if (max_lots_per_side < 1) throw std::invalid_argument("max_lots_per_side must be >= 1");
}

nlohmann::json CityParams::to_json() const {
  return {{"width_px", width_px},
          {"height_px", height_px},
          {"resolution_m", resolution_m},
          {"street_spacing_m", street_spacing_m},
          {"street_width_m", street_width_m},
          {"density", density},
          {"height_lo_m", height_lo_m},
          {"height_hi_m", height_hi_m},
          {"max_lots_per_side", max_lots_per_side}};
}

CityParams CityParams::from_json(const nlohmann::json& doc) {
  CityParams p;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "width_px") p.width_px = it->get<int>();
    else if (k == "height_px") p.height_px = it->get<int>();
    else if (k == "resolution_m") p.resolution_m = it->get<double>();
    else if (k == "street_spacing_m") p.street_spacing_m = it->get<double>();
    else if (k == "street_width_m") p.street_width_m = it->get<double>();
    else if (k == "density") p.density = it->get<double>();
    else if (k == "height_lo_m") p.height_lo_m = it->get<double>();
    else if (k == "height_hi_m") p.height_hi_m = it->get<double>();
    else if (k == "max_lots_per_side") p.max_lots_per_side = it->get<int>();
    else throw std::invalid_argument("unknown city_params key: " + k);
  }
  p.validate();
  return p;
}

namespace {

// Street center lines along one axis: a regular lattice with each line
// jittered by up to a fifth of the pitch.
std::vector<double> street_lines(double span_m, double pitch, Rng& rng) {
  std::uniform_real_distribution<double> jitter(-0.2 * pitch, 0.2 * pitch);
  std::vector<double> lines;
  for (double base = 0.0; base <= span_m + pitch; base += pitch) lines.push_back(base + jitter(rng));
  std::sort(lines.begin(), lines.end());
  return lines;
}

// Lot boundaries inside [a, b): 1..max_lots pieces with jittered cut points.
std::vector<double> lot_cuts(double a, double b, int max_lots, Rng& rng) {
  std::uniform_int_distribution<int> count(1, max_lots);
  const int n = count(rng);
  std::vector<double> cuts{a};
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  for (int k = 1; k < n; ++k) cuts.push_back(a + (b - a) * (k + jitter(rng)) / n);
  cuts.push_back(b);
  return cuts;
}

}  // namespace

CityLayout synth_city_layout(const CityParams& params, std::uint64_t seed) {
  params.validate();
  const int w = params.width_px, h = params.height_px;
  const double res = params.resolution_m;
  Rng rng(seed);
  const auto xs = street_lines(w * res, params.street_spacing_m, rng);
  const auto ys = street_lines(h * res, params.street_spacing_m, rng);
  const double half_street = 0.5 * params.street_width_m;

  std::vector<float> heights(static_cast<std::size_t>(w) * h, 0.0f);
  std::vector<std::uint8_t> block(heights.size(), 0);
  std::bernoulli_distribution built(params.density);
  std::uniform_real_distribution<double> height(params.height_lo_m, params.height_hi_m);

  auto cell_range = [res](double a, double b, int n) {
    // cells whose centers fall in [a, b)
    const int lo = std::max(0, static_cast<int>(std::ceil(a / res - 0.5)));
    const int hi = std::min(n, static_cast<int>(std::ceil(b / res - 0.5)));
    return std::pair{lo, hi};
  };

  for (std::size_t bx = 0; bx + 1 < xs.size(); ++bx) {
    for (std::size_t by = 0; by + 1 < ys.size(); ++by) {
      const double x0 = xs[bx] + half_street, x1 = xs[bx + 1] - half_street;
      const double y0 = ys[by] + half_street, y1 = ys[by + 1] - half_street;
      if (x1 <= x0 || y1 <= y0) continue;
      const auto cx = lot_cuts(x0, x1, params.max_lots_per_side, rng);
      const auto cy = lot_cuts(y0, y1, params.max_lots_per_side, rng);
      for (std::size_t lx = 0; lx + 1 < cx.size(); ++lx) {
        for (std::size_t ly = 0; ly + 1 < cy.size(); ++ly) {
          const bool is_built = built(rng);
          const float hgt = params.height_lo_m == params.height_hi_m ? static_cast<float>(params.height_lo_m)
                                                                     : static_cast<float>(height(rng));
          const auto [i0, i1] = cell_range(cx[lx], cx[lx + 1], w);
          const auto [j0, j1] = cell_range(cy[ly], cy[ly + 1], h);
          for (int j = j0; j < j1; ++j)
            for (int i = i0; i < i1; ++i) {
              const auto k = static_cast<std::size_t>(j) * w + i;
              block[k] = 1;
              if (is_built) heights[k] = hgt;
            }
        }
      }
    }
  }
  return {ElevationGrid(w, h, res, {0.0, 0.0}, std::move(heights)), std::move(block)};
}

ElevationGrid synth_city(const CityParams& params, std::uint64_t seed) {
  return synth_city_layout(params, seed).grid;
}

}  // namespace radiomap
