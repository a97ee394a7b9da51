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

#include "radiomap/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "radiomap/io.hpp"
#include "radiomap/random.hpp"

namespace radiomap {

static_assert(std::endian::native == std::endian::little, "f32le payloads assume a little-endian host");

namespace {

const char* const kHeaderKeys[] = {"width_px", "height_px", "resolution_m", "origin_x_m", "origin_y_m", "dtype"};

bool is_header_key(const std::string& k) {
  return std::any_of(std::begin(kHeaderKeys), std::end(kHeaderKeys), [&](const char* s) { return k == s; });
}

}  // namespace

std::filesystem::path raster_header_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".json";
  return p;
}

std::filesystem::path raster_payload_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".f32";
  return p;
}

void save_raster(const std::filesystem::path& stem, const Raster& raster) {
  const auto& h = raster.header;
  if (static_cast<std::size_t>(h.width_px) * static_cast<std::size_t>(h.height_px) != raster.values.size())
    throw std::invalid_argument("raster payload does not match header dimensions");
  json doc = h.extra.is_object() ? h.extra : json::object();
  doc["width_px"] = h.width_px;
  doc["height_px"] = h.height_px;
  doc["resolution_m"] = h.resolution_m;
  doc["origin_x_m"] = h.origin_x_m;
  doc["origin_y_m"] = h.origin_y_m;
  doc["dtype"] = "f32le";
  std::string blob(raster.values.size() * sizeof(float), '\0');
  if (!blob.empty()) std::memcpy(blob.data(), raster.values.data(), blob.size());
  write_file_atomic(raster_payload_path(stem), blob);
  write_json(raster_header_path(stem), doc);
}

Raster load_raster(const std::filesystem::path& stem) {
  const json doc = read_json(raster_header_path(stem));
  Raster r;
  try {
    if (!doc.is_object()) throw std::runtime_error("header is not an object");
    if (doc.at("dtype").get<std::string>() != "f32le") throw std::runtime_error("unsupported dtype");
    r.header.width_px = doc.at("width_px").get<int>();
    r.header.height_px = doc.at("height_px").get<int>();
    r.header.resolution_m = doc.at("resolution_m").get<double>();
    r.header.origin_x_m = doc.at("origin_x_m").get<double>();
    r.header.origin_y_m = doc.at("origin_y_m").get<double>();
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed raster header " + raster_header_path(stem).string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("malformed raster header " + raster_header_path(stem).string() + ": " + e.what());
  }
  if (r.header.width_px <= 0 || r.header.height_px <= 0)
    throw std::runtime_error("malformed raster header: non-positive dimensions");
  if (!(r.header.resolution_m > 0.0) || !std::isfinite(r.header.resolution_m))
    throw std::runtime_error("malformed raster header: resolution must be positive");
  r.header.extra = json::object();
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!is_header_key(it.key())) r.header.extra[it.key()] = it.value();

  const std::string blob = read_file(raster_payload_path(stem));
  const std::size_t expected =
      static_cast<std::size_t>(r.header.width_px) * static_cast<std::size_t>(r.header.height_px);
  if (blob.size() != expected * sizeof(float))
    throw std::runtime_error("raster payload length mismatch: header declares " + std::to_string(expected) +
                             " floats, payload holds " + std::to_string(blob.size() / sizeof(float)) +
                             (blob.size() % sizeof(float) ? " (plus trailing bytes)" : ""));
  r.values.resize(expected);
  if (expected) std::memcpy(r.values.data(), blob.data(), blob.size());
  return r;
}

// ---------------------------------------------------------------------------

ElevationGrid::ElevationGrid(int width_px, int height_px, double resolution_m, Point2 origin,
                             std::vector<float> heights)
    : width_(width_px), height_(height_px), resolution_(resolution_m), origin_(origin), heights_(std::move(heights)) {
  if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) throw std::invalid_argument("grid resolution must be > 0");
  if (heights_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
    throw std::invalid_argument("grid heights length does not match width x height");
  min_ = std::numeric_limits<float>::max();
  max_ = std::numeric_limits<float>::lowest();
  for (float h : heights_) {
    if (!std::isfinite(h)) throw std::invalid_argument("grid heights must be finite");
    if (h < 0.0f) throw std::invalid_argument("grid heights must be non-negative");
    min_ = std::min(min_, h);
    max_ = std::max(max_, h);
  }
}

std::vector<std::uint8_t> ElevationGrid::footprint_mask() const {
  std::vector<std::uint8_t> mask(heights_.size());
  for (std::size_t k = 0; k < heights_.size(); ++k) mask[k] = heights_[k] - min_ > kFootprintThresholdM;
  return mask;
}

bool ElevationGrid::contains(Point2 p) const {
  return p.x >= origin_.x && p.y >= origin_.y && p.x < origin_.x + width_ * resolution_ &&
         p.y < origin_.y + height_ * resolution_;
}

CellIndex ElevationGrid::cell_of(Point2 p) const {
  return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
          static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
}

Point2 ElevationGrid::cell_center(int i, int j) const {
  return {origin_.x + (i + 0.5) * resolution_, origin_.y + (j + 0.5) * resolution_};
}

Raster to_raster(const ElevationGrid& grid) {
  Raster r;
  r.header.width_px = grid.width_px();
  r.header.height_px = grid.height_px();
  r.header.resolution_m = grid.resolution_m();
  r.header.origin_x_m = grid.origin().x;
  r.header.origin_y_m = grid.origin().y;
  r.values.assign(grid.heights().begin(), grid.heights().end());
  return r;
}

ElevationGrid grid_from_raster(const Raster& r) {
  try {
    return ElevationGrid(r.header.width_px, r.header.height_px, r.header.resolution_m,
                         {r.header.origin_x_m, r.header.origin_y_m}, r.values);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid elevation raster: ") + e.what());
  }
}

ElevationGrid load_grid(const std::filesystem::path& stem) { return grid_from_raster(load_raster(stem)); }

void save_grid(const std::filesystem::path& stem, const ElevationGrid& grid) { save_raster(stem, to_raster(grid)); }

std::vector<std::uint8_t> NormalizedImage::footprint_mask() const {
  std::vector<std::uint8_t> mask(values.size(), 0);
  const double range = height_max_m - height_min_m;
  if (range <= kFootprintThresholdM) return mask;
  for (std::size_t k = 0; k < values.size(); ++k) mask[k] = (1.0 - values[k]) * range > kFootprintThresholdM;
  return mask;
}

// ---------------------------------------------------------------------------

std::vector<float> min_max_normalize(std::span<const float> values) {
  std::vector<float> out(values.size(), 0.0f);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = static_cast<float>((values[k] - lo) / range);
  return out;
}

std::vector<float> invert(std::span<const float> values) {
  std::vector<float> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = 1.0f - values[k];
  return out;
}

// ---------------------------------------------------------------------------

ElevationGrid resample_window(const ElevationGrid& grid, const TxLocation& tx, double extent_m, int out_px) {
  if (!(extent_m > 0.0) || !std::isfinite(extent_m)) throw std::invalid_argument("crop extent must be positive");
  if (out_px < 8) throw std::invalid_argument("crop size must be at least 8 pixels");
  if (!grid.contains(tx.position)) throw std::invalid_argument("tx lies outside the grid");

  const double res = extent_m / out_px;
  const int c = center_index(out_px);
  const Point2 origin{tx.position.x - (c + 0.5) * res, tx.position.y - (c + 0.5) * res};
  const double src_res = grid.resolution_m();
  const Point2 src_origin = grid.origin();

  // Source cell index ranges overlapping each output column/row (positive
  // overlap only); empty ranges mean the output cell lies off-grid.
  auto ranges = [&](double out_origin, double src_o, int src_n) {
    std::vector<std::pair<int, int>> r(out_px);
    for (int k = 0; k < out_px; ++k) {
      const double a = (out_origin + k * res - src_o) / src_res;
      const double b = (out_origin + (k + 1) * res - src_o) / src_res;
      int lo = static_cast<int>(std::floor(a));
      int hi = static_cast<int>(std::ceil(b)) - 1;
      lo = std::max(lo, 0);
      hi = std::min(hi, src_n - 1);
      r[k] = {lo, hi};
    }
    return r;
  };
  const auto xr = ranges(origin.x, src_origin.x, grid.width_px());
  const auto yr = ranges(origin.y, src_origin.y, grid.height_px());

  constexpr float kUnset = -1.0f;
  std::vector<float> heights(static_cast<std::size_t>(out_px) * out_px, kUnset);
  float window_min = std::numeric_limits<float>::max();
  for (int j = 0; j < out_px; ++j) {
    for (int i = 0; i < out_px; ++i) {
      const auto [x0, x1] = xr[i];
      const auto [y0, y1] = yr[j];
      if (x0 > x1 || y0 > y1) continue;
      float m = 0.0f;
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const float h = grid.at(x, y);
          window_min = std::min(window_min, h);
          m = std::max(m, h);
        }
      heights[static_cast<std::size_t>(j) * out_px + i] = m;
    }
  }
  if (window_min == std::numeric_limits<float>::max()) window_min = grid.min_height();
  for (float& h : heights)
    if (h == kUnset) h = window_min;
  // The tx pixel keeps the ground under the antenna; pooling would otherwise
  // let a neighboring roof swallow the tx at coarse resolutions.
  heights[static_cast<std::size_t>(c) * out_px + c] = grid.at(grid.cell_of(tx.position));
  return ElevationGrid(out_px, out_px, res, origin, std::move(heights));
}

NormalizedImage normalize_elevation(const ElevationGrid& window) {
  if (window.width_px() != window.height_px()) throw std::invalid_argument("elevation image must be square");
  NormalizedImage img;
  img.size_px = window.width_px();
  img.resolution_m = window.resolution_m();
  img.values = invert(min_max_normalize(window.heights()));
  img.height_min_m = window.min_height();
  img.height_max_m = window.max_height();
  return img;
}

NormalizedImage crop_centered(const ElevationGrid& grid, const TxLocation& tx, double extent_m, int out_px) {
  return normalize_elevation(resample_window(grid, tx, extent_m, out_px));
}

TxLocation window_tx(const ElevationGrid& window, const TxLocation& tx) {
  const int c = center_index(window.width_px());
  return {window.cell_center(c, c), tx.height_m};
}

// ---------------------------------------------------------------------------

std::string to_string(GeometricTransform t) {
  switch (t) {
    case GeometricTransform::identity: return "identity";
    case GeometricTransform::rot90: return "rot90";
    case GeometricTransform::rot180: return "rot180";
    case GeometricTransform::rot270: return "rot270";
    case GeometricTransform::flip_h: return "flip_h";
    case GeometricTransform::flip_v: return "flip_v";
  }
  throw std::logic_error("unknown transform");
}

GeometricTransform transform_from_string(const std::string& name) {
  for (auto t : kAllTransforms)
    if (to_string(t) == name) return t;
  throw std::invalid_argument("unknown transform: " + name);
}

Dihedral Dihedral::of(GeometricTransform t) {
  switch (t) {
    case GeometricTransform::identity: return {1, 0, 0, 1};
    case GeometricTransform::rot90: return {0, -1, 1, 0};
    case GeometricTransform::rot180: return {-1, 0, 0, -1};
    case GeometricTransform::rot270: return {0, 1, -1, 0};
    case GeometricTransform::flip_h: return {-1, 0, 0, 1};
    case GeometricTransform::flip_v: return {1, 0, 0, -1};
  }
  throw std::logic_error("unknown transform");
}

Dihedral Dihedral::compose(const Dihedral& b) const {
  return {m00 * b.m00 + m01 * b.m10, m00 * b.m01 + m01 * b.m11, m10 * b.m00 + m11 * b.m10,
          m10 * b.m01 + m11 * b.m11};
}

Dihedral Dihedral::inverse() const { return {m00, m10, m01, m11}; }  // orthogonal: inverse is transpose

CellIndex Dihedral::apply(CellIndex c, int n) const {
  // centered odd coordinates keep the mapping in exact integer arithmetic
  const int u = 2 * c.i - (n - 1);
  const int v = 2 * c.j - (n - 1);
  const int u2 = m00 * u + m01 * v;
  const int v2 = m10 * u + m11 * v;
  return {(u2 + n - 1) / 2, (v2 + n - 1) / 2};
}

CellIndex transform_cell(CellIndex c, int n, GeometricTransform t) { return Dihedral::of(t).apply(c, n); }

std::vector<float> apply_transform(std::span<const float> values, int n, const Dihedral& d) {
  if (values.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("transform needs a square raster");
  std::vector<float> out(values.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const CellIndex dst = d.apply({i, j}, n);
      out[static_cast<std::size_t>(dst.j) * n + dst.i] = values[static_cast<std::size_t>(j) * n + i];
    }
  return out;
}

std::vector<float> apply_transform(std::span<const float> values, int n, GeometricTransform t) {
  return apply_transform(values, n, Dihedral::of(t));
}

NormalizedImage apply_transform(const NormalizedImage& image, GeometricTransform t) {
  NormalizedImage out = image;
  out.values = apply_transform(image.values, image.size_px, t);
  return out;
}

ElevationGrid apply_transform(const ElevationGrid& grid, GeometricTransform t) {
  if (grid.width_px() != grid.height_px()) throw std::invalid_argument("transform needs a square grid");
  std::vector<float> h(grid.heights().begin(), grid.heights().end());
  return ElevationGrid(grid.width_px(), grid.height_px(), grid.resolution_m(), grid.origin(),
                       apply_transform(h, grid.width_px(), t));
}

TxLocation apply_transform(const TxLocation& tx, const ElevationGrid& grid, GeometricTransform t) {
  const int n = grid.width_px();
  const double res = grid.resolution_m();
  // continuous centered coordinates in half-cell units, as Dihedral::apply
  const double u = 2.0 * (tx.position.x - grid.origin().x) / res - n;
  const double v = 2.0 * (tx.position.y - grid.origin().y) / res - n;
  const Dihedral d = Dihedral::of(t);
  const double u2 = d.m00 * u + d.m01 * v;
  const double v2 = d.m10 * u + d.m11 * v;
  return {{grid.origin().x + (u2 + n) * 0.5 * res, grid.origin().y + (v2 + n) * 0.5 * res}, tx.height_m};
}

// ---------------------------------------------------------------------------

std::vector<TxLocation> sample_tx_locations(const ElevationGrid& grid, int n, std::uint64_t seed, double tx_height_m) {
  if (n < 0) throw std::invalid_argument("tx count must be non-negative");
  if (tx_height_m < 0.0) throw std::invalid_argument("tx height must be non-negative");
  std::vector<std::size_t> valid;
  for (int j = 0; j < grid.height_px(); ++j)
    for (int i = 0; i < grid.width_px(); ++i)
      if (!grid.is_footprint(i, j)) valid.push_back(static_cast<std::size_t>(j) * grid.width_px() + i);
  if (valid.size() < static_cast<std::size_t>(n))
    throw std::invalid_argument("cannot place " + std::to_string(n) + " tx: only " + std::to_string(valid.size()) +
                                " non-footprint cells available");
  Rng rng(seed);
  std::vector<TxLocation> out;
  out.reserve(n);
  // partial Fisher-Yates: the first n slots become a uniform n-subset
  for (int k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, valid.size() - 1);
    std::swap(valid[k], valid[pick(rng)]);
    const int i = static_cast<int>(valid[k] % grid.width_px());
    const int j = static_cast<int>(valid[k] / grid.width_px());
    out.push_back({grid.cell_center(i, j), tx_height_m});
  }
  return out;
}

}  // namespace radiomap
