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

#include "radiomap/io.hpp"
#include "radiomap/propagate.hpp"

namespace radiomap {

Raster to_raster(const RadioMap& map) {
  Raster r;
  r.header.width_px = map.width_px;
  r.header.height_px = map.height_px;
  r.header.resolution_m = map.resolution_m;
  r.header.origin_x_m = map.origin.x;
  r.header.origin_y_m = map.origin.y;
  r.header.extra = {{"quantity", "path_gain_db"},
                    {"tx_x_m", map.tx.position.x},
                    {"tx_y_m", map.tx.position.y},
                    {"tx_height_m", map.tx.height_m}};
  r.values = map.gains_db;
  return r;
}

RadioMap radio_map_from_raster(const Raster& raster) {
  RadioMap m;
  m.width_px = raster.header.width_px;
  m.height_px = raster.header.height_px;
  m.resolution_m = raster.header.resolution_m;
  m.origin = {raster.header.origin_x_m, raster.header.origin_y_m};
  m.gains_db = raster.values;
  const auto& x = raster.header.extra;
  try {
    m.tx.position = {x.at("tx_x_m").get<double>(), x.at("tx_y_m").get<double>()};
    m.tx.height_m = x.at("tx_height_m").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("radio map header lacks tx fields: ") + e.what());
  }
  for (float v : m.gains_db)
    if (!std::isfinite(v)) throw std::runtime_error("radio map contains non-finite gains");
  return m;
}

void save_radio_map(const std::filesystem::path& stem, const RadioMap& map) { save_raster(stem, to_raster(map)); }

RadioMap load_radio_map(const std::filesystem::path& stem) { return radio_map_from_raster(load_raster(stem)); }

RadioMap apply_transform(const RadioMap& map, GeometricTransform t) {
  if (map.width_px != map.height_px) throw std::invalid_argument("transform needs a square radio map");
  const int n = map.width_px;
  const ElevationGrid frame(n, n, map.resolution_m, map.origin, std::vector<float>(static_cast<std::size_t>(n) * n));
  RadioMap out = map;
  out.gains_db = apply_transform(map.gains_db, n, t);
  out.tx = apply_transform(map.tx, frame, t);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> clamped(const GainField& f) {
  std::vector<double> v(f.gain_db.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = clamp_gain_db(f.gain_db[k]);
  v[static_cast<std::size_t>(f.tx_cell.j) * f.width_px + f.tx_cell.i] = kGainCeilDb;
  return v;
}

double masked_rmse(const Scene& scene, const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (scene.footprint()[k]) continue;
    const double d = a[k] - b[k];
    acc += d * d;
    ++n;
  }
  return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
}

}  // namespace

const SweepRow& SweepReport::row(int depth, bool diffraction) const {
  for (const auto& r : rows)
    if (r.depth == depth && r.diffraction == diffraction) return r;
  throw std::out_of_range("no sweep row for depth " + std::to_string(depth));
}

int SweepReport::sweet_spot_depth(double fraction) const {
  std::vector<const SweepRow*> on;
  for (const auto& r : rows)
    if (r.diffraction) on.push_back(&r);
  if (on.empty()) throw std::logic_error("sweep has no diffraction rows");
  const double base = row(baseline_depth, true).rmse_mean;
  const double span = on.front()->rmse_mean - base;
  for (const SweepRow* r : on)
    if (r->rmse_mean - base <= fraction * span) return r->depth;
  return baseline_depth;
}

SweepReport fidelity_sweep(const std::vector<SweepScene>& scenes, std::vector<int> depths,
                           const PropagationConfig& cfg) {
  if (scenes.empty()) throw std::invalid_argument("fidelity sweep needs at least one scene");
  if (depths.empty()) throw std::invalid_argument("fidelity sweep needs at least one depth");
  if (!std::is_sorted(depths.begin(), depths.end()) ||
      std::adjacent_find(depths.begin(), depths.end()) != depths.end())
    throw std::invalid_argument("sweep depths must be strictly ascending");
  for (int d : depths)
    if (d < 0 || d > kMaxPathDepth) throw std::invalid_argument("sweep depth out of range");

  SweepReport report;
  report.baseline_depth = kMaxPathDepth;
  for (bool diff : {false, true})
    for (int d : depths) {
      SweepRow r;
      r.depth = d;
      r.diffraction = diff;
      report.rows.push_back(r);
    }

  for (const auto& sc : scenes) {
    const Scene scene(sc.grid);
    PropagationConfig base_cfg = cfg;
    base_cfg.max_depth = kMaxPathDepth;
    base_cfg.diffraction_enabled = true;
    const GainField base_field = trace_gain_field(scene, sc.tx, base_cfg);
    const auto base = clamped(base_field);
    for (auto& r : report.rows) {
      if (r.depth == kMaxPathDepth && r.diffraction) {
        r.rmse_db.push_back(0.0);
        r.runtime_s.push_back(base_field.trace_seconds);
        continue;
      }
      PropagationConfig c = cfg;
      c.max_depth = r.depth;
      c.diffraction_enabled = r.diffraction;
      const GainField f = trace_gain_field(scene, sc.tx, c);
      r.rmse_db.push_back(masked_rmse(scene, clamped(f), base));
      r.runtime_s.push_back(f.trace_seconds);
    }
  }
  for (auto& r : report.rows) {
    r.rmse_mean = mean(r.rmse_db);
    r.rmse_ci95 = ci95_halfwidth(r.rmse_db);
    r.runtime_mean = mean(r.runtime_s);
    r.runtime_ci95 = ci95_halfwidth(r.runtime_s);
  }
  return report;
}

std::string sweep_csv(const SweepReport& report) {
  CsvWriter csv({"depth", "diffraction", "n_scenes", "rmse_mean_db", "rmse_ci95_db"});
  for (const auto& r : report.rows)
    csv.add_row({std::to_string(r.depth), r.diffraction ? "1" : "0", std::to_string(r.rmse_db.size()),
                 format_double(r.rmse_mean), format_double(r.rmse_ci95)});
  return csv.str();
}

std::string sweep_timing_csv(const SweepReport& report) {
  CsvWriter csv({"depth", "diffraction", "runtime_mean_s", "runtime_ci95_s"});
  for (const auto& r : report.rows)
    csv.add_row({std::to_string(r.depth), r.diffraction ? "1" : "0", format_double(r.runtime_mean),
                 format_double(r.runtime_ci95)});
  return csv.str();
}

MisconfigResult misconfig_study(const std::vector<SweepScene>& scenes, const Material& true_material,
                                const Material& assumed_material, const PropagationConfig& cfg) {
  if (scenes.empty()) throw std::invalid_argument("misconfiguration study needs at least one scene");
  MisconfigResult out;
  out.degenerate = true_material.reflection_coeff == assumed_material.reflection_coeff;
  std::vector<double> errors;
  for (const auto& sc : scenes) {
    const Scene scene(sc.grid);
    PropagationConfig ct = cfg, ca = cfg;
    ct.material = true_material;
    ca.material = assumed_material;
    const auto gt = clamped(trace_gain_field(scene, sc.tx, ct));
    const auto ga = out.degenerate ? gt : clamped(trace_gain_field(scene, sc.tx, ca));
    const CellIndex tc = sc.grid.cell_of(sc.tx.position);
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (scene.footprint()[k] || k == static_cast<std::size_t>(tc.j) * sc.grid.width_px() + tc.i) continue;
      errors.push_back(std::abs(gt[k] - ga[k]));
    }
  }
  out.abs_error_db = Ecdf(std::move(errors));
  return out;
}

}  // namespace radiomap
