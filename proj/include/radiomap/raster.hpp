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
#include <utility>
#include <vector>

#include <json.hpp>

namespace radiomap {

/// A cell counts as building footprint when it rises more than this above
/// the local terrain (the minimum of the grid or window it belongs to).
inline constexpr double kFootprintThresholdM = 2.0;
inline constexpr double kDefaultTxHeightM = 10.0;
inline constexpr int kDefaultImagePx = 64;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Point3&, const Point3&) = default;
};

struct CellIndex {
  int i = 0;  // column (x)
  int j = 0;  // row (y)
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// ---------------------------------------------------------------------------
// Raster container: `{stem}.json` header plus `{stem}.f32` row-major
// little-endian float32 payload.

struct RasterHeader {
  int width_px = 0;
  int height_px = 0;
  double resolution_m = 0.0;
  double origin_x_m = 0.0;
  double origin_y_m = 0.0;
  /// Additional header fields carried through load/save untouched.
  nlohmann::json extra = nlohmann::json::object();
};

struct Raster {
  RasterHeader header;
  std::vector<float> values;
};

void save_raster(const std::filesystem::path& stem, const Raster& raster);
Raster load_raster(const std::filesystem::path& stem);
std::filesystem::path raster_header_path(const std::filesystem::path& stem);
std::filesystem::path raster_payload_path(const std::filesystem::path& stem);

// ---------------------------------------------------------------------------

/// Terrain plus building heights in meters over a local planar frame.
/// Cell (i, j) spans [origin + i*res, origin + (i+1)*res) in x and likewise
/// in y; storage is row-major with row j.
class ElevationGrid {
 public:
  ElevationGrid() = default;
  ElevationGrid(int width_px, int height_px, double resolution_m, Point2 origin, std::vector<float> heights);

  int width_px() const { return width_; }
  int height_px() const { return height_; }
  double resolution_m() const { return resolution_; }
  Point2 origin() const { return origin_; }
  std::span<const float> heights() const { return heights_; }
  std::size_t cell_count() const { return heights_.size(); }

  float at(int i, int j) const { return heights_[static_cast<std::size_t>(j) * width_ + i]; }
  float at(CellIndex c) const { return at(c.i, c.j); }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width_ && j < height_; }

  float min_height() const { return min_; }
  float max_height() const { return max_; }

  /// Height above the grid minimum exceeds the footprint threshold.
  bool is_footprint(int i, int j) const { return at(i, j) - min_ > kFootprintThresholdM; }
  std::vector<std::uint8_t> footprint_mask() const;

  bool contains(Point2 p) const;
  CellIndex cell_of(Point2 p) const;
  Point2 cell_center(int i, int j) const;

  friend bool operator==(const ElevationGrid&, const ElevationGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.0;
  Point2 origin_;
  std::vector<float> heights_;
  float min_ = 0.0f;
  float max_ = 0.0f;
};

ElevationGrid load_grid(const std::filesystem::path& stem);
void save_grid(const std::filesystem::path& stem, const ElevationGrid& grid);
Raster to_raster(const ElevationGrid& grid);
ElevationGrid grid_from_raster(const Raster& raster);

struct TxLocation {
  Point2 position;
  double height_m = kDefaultTxHeightM;
  friend bool operator==(const TxLocation&, const TxLocation&) = default;
};

/// Min-max normalized, inverted elevation image: taller means closer to 0.
struct NormalizedImage {
  int size_px = 0;
  double resolution_m = 0.0;
  std::vector<float> values;
  /// Height range the values were scaled from; lets the footprint mask be
  /// recovered from the stored image.
  double height_min_m = 0.0;
  double height_max_m = 0.0;

  std::vector<std::uint8_t> footprint_mask() const;
};

// ---------------------------------------------------------------------------
// Normalization

/// (v - min) / (max - min); all zeros when the input is constant.
std::vector<float> min_max_normalize(std::span<const float> values);
/// 1 - v.
std::vector<float> invert(std::span<const float> values);

// ---------------------------------------------------------------------------
// Cropping

/// Square window of side extent_m centered on tx, resampled to out_px by
/// max-pooling (in meters, not normalized). The tx sits at the center of
/// pixel floor(out_px/2) in both axes; cells outside the source grid take
/// the terrain minimum of the covered window. The tx pixel itself takes the
/// height of the source cell under the tx.
ElevationGrid resample_window(const ElevationGrid& grid, const TxLocation& tx, double extent_m, int out_px);

/// resample_window followed by min-max normalization and inversion.
NormalizedImage crop_centered(const ElevationGrid& grid, const TxLocation& tx, double extent_m, int out_px);
NormalizedImage normalize_elevation(const ElevationGrid& window);

/// The tx placement inside a window produced by resample_window.
TxLocation window_tx(const ElevationGrid& window, const TxLocation& tx);
inline int center_index(int out_px) { return out_px / 2; }

// ---------------------------------------------------------------------------
// Geometric transforms of square rasters

enum class GeometricTransform { identity, rot90, rot180, rot270, flip_h, flip_v };

inline constexpr std::array<GeometricTransform, 6> kAllTransforms = {
    GeometricTransform::identity, GeometricTransform::rot90,  GeometricTransform::rot180,
    GeometricTransform::rot270,   GeometricTransform::flip_h, GeometricTransform::flip_v};

std::string to_string(GeometricTransform t);
GeometricTransform transform_from_string(const std::string& name);

/// Element of the dihedral group of the square. Pixel (i, j) of an n x n
/// raster maps to (a*i + b*j + c, d*i + e*j + f) with a 2x2 signed
/// permutation matrix; the six augmentation transforms are members.
struct Dihedral {
  int m00 = 1, m01 = 0, m10 = 0, m11 = 1;

  static Dihedral of(GeometricTransform t);
  Dihedral compose(const Dihedral& inner) const;  // this after inner
  Dihedral inverse() const;
  CellIndex apply(CellIndex c, int n) const;
  friend bool operator==(const Dihedral&, const Dihedral&) = default;
};

/// Destination pixel of source pixel c in an n x n raster.
CellIndex transform_cell(CellIndex c, int n, GeometricTransform t);

std::vector<float> apply_transform(std::span<const float> values, int n, const Dihedral& d);
std::vector<float> apply_transform(std::span<const float> values, int n, GeometricTransform t);
NormalizedImage apply_transform(const NormalizedImage& image, GeometricTransform t);
/// Square grids only; the footprint structure is permuted with the heights.
ElevationGrid apply_transform(const ElevationGrid& grid, GeometricTransform t);
/// The tx position mapped along with the pixels of `grid`.
TxLocation apply_transform(const TxLocation& tx, const ElevationGrid& grid, GeometricTransform t);

// ---------------------------------------------------------------------------

/// n distinct tx cells drawn uniformly from the non-footprint cells of the
/// grid, placed at cell centers.
std::vector<TxLocation> sample_tx_locations(const ElevationGrid& grid, int n, std::uint64_t seed,
                                            double tx_height_m = kDefaultTxHeightM);

// ---------------------------------------------------------------------------
// Procedural city

struct CityParams {
  int width_px = 400;
  int height_px = 400;
  double resolution_m = 10.0;
  double street_spacing_m = 120.0;  // lattice pitch
  double street_width_m = 20.0;
  double density = 0.55;             // fraction of block area built over
  double height_lo_m = 8.0;
  double height_hi_m = 60.0;
  int max_lots_per_side = 3;

  void validate() const;
  nlohmann::json to_json() const;
  static CityParams from_json(const nlohmann::json& doc);
};

struct CityLayout {
  ElevationGrid grid;
  std::vector<std::uint8_t> block_mask;  // 1 where the cell is inside a block (not street)
};

CityLayout synth_city_layout(const CityParams& params, std::uint64_t seed);
ElevationGrid synth_city(const CityParams& params, std::uint64_t seed);

}  // namespace radiomap
