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

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiomap/raster.hpp"
#include "radiomap/stats.hpp"

namespace radiomap {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kGainFloorDb = -150.0;
inline constexpr double kGainCeilDb = -50.0;
inline constexpr int kMaxPathDepth = 20;

enum class PathKind { los, reflected, diffracted };
std::string to_string(PathKind k);

/// One term of h(tau) = sum_i alpha_i delta(tau - tau_i).
struct PathComponent {
  std::complex<double> amplitude;
  double delay_s = 0.0;
  int interaction_count = 0;
  PathKind kind = PathKind::los;
};

struct ChannelImpulseResponse {
  std::vector<PathComponent> components;  // ascending delay
};

/// 10 log10(sum |alpha_i|^2) without clamping; -inf for an empty response.
double path_gain_db_unclamped(const ChannelImpulseResponse& cir);
/// Path gain clamped to [kGainFloorDb, kGainCeilDb]; an empty response maps
/// to the floor.
double path_gain_from_cir(const ChannelImpulseResponse& cir);
double clamp_gain_db(double db);

struct Material {
  std::string name;
  double reflection_coeff = 0.5;
  static Material concrete() { return {"concrete", 0.5}; }
  static Material brick() { return {"brick", 0.35}; }
};

struct PropagationConfig {
  double frequency_hz = 1e9;
  int max_depth = 10;
  bool diffraction_enabled = true;
  Material material = Material::concrete();
  double tx_power_dbm = 44.0;
  double rx_height_m = 1.5;
  /// Launch directions per octant for candidate discovery; 8x this many rays.
  int rays_per_octant = 256;
  /// Worker threads for per-cell tracing; results do not depend on it.
  int jobs = 1;

  double wavelength_m() const { return kSpeedOfLight / frequency_hz; }
  void validate() const;
  nlohmann::json to_json() const;
  static PropagationConfig from_json(const nlohmann::json& doc);
};

/// Axis-aligned wall face between a footprint cell and a lower neighbor.
struct WallSegment {
  Point2 a, b;             // endpoints in meters
  double top_height_m = 0;  // height of the building side
  double base_height_m = 0; // height of the lower neighbor
  Point2 normal;           // unit normal pointing into the open side
};

/// Grid plus the wall geometry derived from it. Building this is the scene
/// loading step and is kept out of trace timing.
class Scene {
 public:
  explicit Scene(ElevationGrid grid);

  const ElevationGrid& grid() const { return grid_; }
  std::span<const WallSegment> walls() const { return walls_; }
  std::span<const std::uint8_t> footprint() const { return footprint_; }
  bool is_footprint(int i, int j) const { return footprint_[static_cast<std::size_t>(j) * grid_.width_px() + i] != 0; }

  // Grid-unit wall records used by the tracer. axis 0: wall on the line
  // x = line (a vertical face), spanning y in [lo, hi]; axis 1 likewise with
  // x and y exchanged. facing is +1 when the open side lies at larger
  // coordinate.
  struct GridWall {
    int axis = 0;
    int line = 0;
    int lo = 0, hi = 0;
    int facing = 1;
    double top = 0.0, base = 0.0;
  };
  std::span<const GridWall> grid_walls() const { return grid_walls_; }
  /// Wall id of the face on line x = i between rows [j, j+1), or -1.
  int vertical_face_wall(int i, int j) const { return vface_[static_cast<std::size_t>(j) * (grid_.width_px() + 1) + i]; }
  /// Wall id of the face on line y = j between columns [i, i+1), or -1.
  int horizontal_face_wall(int i, int j) const { return hface_[static_cast<std::size_t>(j) * grid_.width_px() + i]; }

 private:
  ElevationGrid grid_;
  std::vector<std::uint8_t> footprint_;
  std::vector<GridWall> grid_walls_;
  std::vector<WallSegment> walls_;
  std::vector<int> vface_, hface_;
};

std::vector<WallSegment> extract_walls(const ElevationGrid& grid);

/// True iff every cell crossed by the segment a-b (supercover traversal)
/// lies strictly below the straight ray height over that cell.
bool los_visible(const ElevationGrid& grid, Point3 a, Point3 b);

/// Knife-edge loss J(nu) in dB; 0 for nu <= -0.78.
double knife_edge_loss_db(double nu);
/// Fresnel-Kirchhoff parameter for clearance h over sub-paths d1, d2.
double fresnel_parameter(double clearance_m, double d1_m, double d2_m, double wavelength_m);

/// Deterministic 2.5D multipath between two 3D points: line of sight,
/// specular wall reflections up to cfg.max_depth, and the dominant rooftop
/// knife edge when the direct ray is blocked.
ChannelImpulseResponse trace_paths(const Scene& scene, Point3 tx, Point3 rx, const PropagationConfig& cfg);

struct RadioMap {
  int width_px = 0;
  int height_px = 0;
  double resolution_m = 0.0;
  Point2 origin;
  std::vector<float> gains_db;
  TxLocation tx;
};

Raster to_raster(const RadioMap& map);
RadioMap radio_map_from_raster(const Raster& raster);
void save_radio_map(const std::filesystem::path& stem, const RadioMap& map);
RadioMap load_radio_map(const std::filesystem::path& stem);
RadioMap apply_transform(const RadioMap& map, GeometricTransform t);

/// Pre-clamp per-cell result of tracing a whole grid.
struct GainField {
  int width_px = 0;
  int height_px = 0;
  std::vector<double> gain_db;  // -inf: no path; NaN: footprint cell
  CellIndex tx_cell;
  double trace_seconds = 0.0;   // excludes scene construction
};

GainField trace_gain_field(const Scene& scene, const TxLocation& tx, const PropagationConfig& cfg);
RadioMap compute_radio_map(const Scene& scene, const TxLocation& tx, const PropagationConfig& cfg);
RadioMap compute_radio_map(const ElevationGrid& grid, const TxLocation& tx, const PropagationConfig& cfg);
/// Clamped map from a field (footprint -> floor, tx cell -> ceiling).
RadioMap radio_map_from_field(const Scene& scene, const TxLocation& tx, const GainField& field);

// ---------------------------------------------------------------------------
// Harnesses

struct SweepScene {
  ElevationGrid grid;
  TxLocation tx;
};

struct SweepRow {
  int depth = 0;
  bool diffraction = false;
  std::vector<double> rmse_db;      // per scene
  std::vector<double> runtime_s;    // per scene
  double rmse_mean = 0.0, rmse_ci95 = 0.0;
  double runtime_mean = 0.0, runtime_ci95 = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  int baseline_depth = kMaxPathDepth;
  const SweepRow& row(int depth, bool diffraction) const;
  /// Smallest depth (diffraction on) whose mean RMSE is within `fraction`
  /// of the depth-1 -> baseline gap from the baseline.
  int sweet_spot_depth(double fraction = 0.2) const;
};

/// RMSE (dB, non-footprint cells) of every (depth, diffraction) combination
/// against the depth-20 + diffraction baseline, plus trace runtimes.
SweepReport fidelity_sweep(const std::vector<SweepScene>& scenes, std::vector<int> depths,
                           const PropagationConfig& cfg);
std::string sweep_csv(const SweepReport& report);
/// Runtime columns only; kept apart from the deterministic RMSE table.
std::string sweep_timing_csv(const SweepReport& report);

struct MisconfigResult {
  Ecdf abs_error_db;
  bool degenerate = false;  // identical materials
};

/// Per-cell |gain(true material) - gain(assumed material)| pooled over scenes.
MisconfigResult misconfig_study(const std::vector<SweepScene>& scenes, const Material& true_material,
                                const Material& assumed_material, const PropagationConfig& cfg);

}  // namespace radiomap
