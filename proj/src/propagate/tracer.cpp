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
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "internal.hpp"
#include "radiomap/parallel.hpp"

namespace radiomap {

namespace detail {

namespace {

// Candidate reflection sequences form a trie over wall ids. Each node holds
// the image of the tx after mirroring through every wall on its path.
struct Node {
  int wall = -1;
  int parent = -1;
  int key = -1;  // id of the (axis, line, facing) sequence, for dedup
  int depth = 0;
  Vec2 image;
};

struct WallRel {
  int axis = 0;
  int facing = 1;
  double line = 0.0, lo = 0.0, hi = 0.0;  // relative cell units
  double top = 0.0, base = 0.0;
};

}  // namespace

class Tracer {
 public:
  Tracer(const Scene& scene, Vec2 off, double z_tx, const PropagationConfig& cfg)
      : scene_(scene), grid_(scene.grid()), off_(off), z_tx_(z_tx), cfg_(cfg) {
    cfg.validate();
    lambda_ = cfg.wavelength_m();
    res_ = grid_.resolution_m();
    for (const auto& w : scene.grid_walls()) {
      const double lo_off = w.axis == 0 ? off.y : off.x;
      const double line_off = w.axis == 0 ? off.x : off.y;
      walls_.push_back({w.axis, w.facing, w.line - line_off, w.lo - lo_off, w.hi - lo_off, w.top, w.base});
    }
    if (cfg.max_depth > 0) build_candidates();
  }

  ChannelImpulseResponse trace(Vec2 rx, double z_rx) const;

 private:
  static double along(const WallRel& w, Vec2 p) { return w.axis == 0 ? p.x : p.y; }
  static double across(const WallRel& w, Vec2 p) { return w.axis == 0 ? p.y : p.x; }
  static bool in_front(const WallRel& w, Vec2 p) { return (along(w, p) - w.line) * w.facing > 0.0; }

  int child(int parent, int wall);
  void build_candidates();
  void launch(Vec2 dir);
  bool reflection_path(int node, Vec2 rx, double z_rx, PathComponent& out) const;
  std::complex<double> free_space(double d3) const {
    const double k = 2.0 * std::numbers::pi / lambda_;
    return std::polar(lambda_ / (4.0 * std::numbers::pi * d3), -k * d3);
  }

  const Scene& scene_;
  const ElevationGrid& grid_;
  Vec2 off_;
  double z_tx_;
  PropagationConfig cfg_;
  double lambda_ = 0.0, res_ = 0.0;
  std::vector<WallRel> walls_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, int> child_index_;  // (parent+1, wall) -> node, -2 when invalid
  std::unordered_map<std::uint64_t, int> key_index_;
  int n_keys_ = 0;
};

int Tracer::child(int parent, int wall) {
  const std::uint64_t slot = (static_cast<std::uint64_t>(parent + 1) << 32) | static_cast<std::uint32_t>(wall);
  if (auto it = child_index_.find(slot); it != child_index_.end()) return it->second;
  const WallRel& w = walls_[wall];
  const Vec2 src = parent < 0 ? Vec2{} : nodes_[parent].image;
  int id = -2;
  if (in_front(w, src)) {
    Node n;
    n.wall = wall;
    n.parent = parent;
    n.depth = parent < 0 ? 1 : nodes_[parent].depth + 1;
    n.image = src;
    if (w.axis == 0) n.image.x = 2.0 * w.line - src.x;
    else n.image.y = 2.0 * w.line - src.y;
    const int parent_key = parent < 0 ? -1 : nodes_[parent].key;
    const auto line_code = static_cast<std::uint64_t>(scene_.grid_walls()[wall].line) * 4 +
                           static_cast<std::uint64_t>(w.axis * 2 + (w.facing > 0));
    const std::uint64_t kslot = (static_cast<std::uint64_t>(parent_key + 1) << 24) ^ line_code;
    auto [kit, inserted] = key_index_.try_emplace(kslot, n_keys_);
    if (inserted) ++n_keys_;
    n.key = kit->second;
    id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
  }
  child_index_.emplace(slot, id);
  return id;
}

void Tracer::build_candidates() {
  // every single-bounce sequence is a candidate
  for (int w = 0; w < static_cast<int>(walls_.size()); ++w) child(-1, w);
  // deeper sequences come from shooting rays in the horizontal plane
  const int m = cfg_.rays_per_octant;
  for (int i = 0; i < m; ++i) {
    const double theta = (std::numbers::pi / 4.0) * (i + 0.5) / m;
    const double c = std::cos(theta), s = std::sin(theta);
    const Vec2 dirs[8] = {{c, s}, {s, c}, {-s, c}, {-c, s}, {-c, -s}, {-s, -c}, {s, -c}, {c, -s}};
    for (const Vec2& d : dirs) launch(d);
  }
}

void Tracer::launch(Vec2 d) {
  const int w = grid_.width_px(), h = grid_.height_px();
  const auto& gwalls = scene_.grid_walls();
  Vec2 p{};
  int cx = static_cast<int>(std::floor(off_.x)), cy = static_cast<int>(std::floor(off_.y));
  int node = -1;
  for (int bounce = 0; bounce < cfg_.max_depth;) {
    const int sx = d.x > 0 ? 1 : -1, sy = d.y > 0 ? 1 : -1;
    const double bx = (sx > 0 ? cx + 1 : cx) - off_.x;
    const double by = (sy > 0 ? cy + 1 : cy) - off_.y;
    const double tx = d.x != 0.0 ? (bx - p.x) / d.x : std::numeric_limits<double>::infinity();
    const double ty = d.y != 0.0 ? (by - p.y) / d.y : std::numeric_limits<double>::infinity();
    if (tx == ty) return;  // exact corner hit; dropped in every orientation alike
    if (tx < ty) {
      const int ncx = cx + sx;
      if (ncx < 0 || ncx >= w) return;
      const int line = sx > 0 ? cx + 1 : cx;
      const int wid = scene_.vertical_face_wall(line, cy);
      p = {bx, p.y + d.y * tx};
      if (wid >= 0 && gwalls[wid].facing == -sx) {
        d.x = -d.x;
        node = child(node, wid);
        if (node < 0) return;
        ++bounce;
      } else {
        cx = ncx;
      }
    } else {
      const int ncy = cy + sy;
      if (ncy < 0 || ncy >= h) return;
      const int line = sy > 0 ? cy + 1 : cy;
      const int wid = scene_.horizontal_face_wall(cx, line);
      p = {p.x + d.x * ty, by};
      if (wid >= 0 && gwalls[wid].facing == -sy) {
        d.y = -d.y;
        node = child(node, wid);
        if (node < 0) return;
        ++bounce;
      } else {
        cy = ncy;
      }
    }
  }
}

bool Tracer::reflection_path(int node, Vec2 rx, double z_rx, PathComponent& out) const {
  // Back-trace reflection points from the rx towards the tx.
  Vec2 pts[kMaxPathDepth + 2];
  int wall_of[kMaxPathDepth + 2];
  const int k = nodes_[node].depth;
  pts[k + 1] = rx;
  Vec2 cur = rx;
  for (int n = node, slot = k; n >= 0; n = nodes_[n].parent, --slot) {
    const WallRel& w = walls_[nodes_[n].wall];
    if (!in_front(w, cur)) return false;
    const Vec2 img = nodes_[n].image;
    const double pa = along(w, cur), ia = along(w, img);
    const double s = (w.line - pa) / (ia - pa);
    const double pb = across(w, cur);
    const double c = pb + s * (across(w, img) - pb);
    if (c < w.lo || c > w.hi) return false;
    cur = w.axis == 0 ? Vec2{w.line, c} : Vec2{c, w.line};
    pts[slot] = cur;
    wall_of[slot] = nodes_[n].wall;
  }
  pts[0] = Vec2{};

  double seg[kMaxPathDepth + 2];
  double total = 0.0;
  for (int i = 0; i <= k; ++i) {
    seg[i] = length({pts[i + 1].x - pts[i].x, pts[i + 1].y - pts[i].y});
    total += seg[i];
  }
  if (!(total > 0.0)) return false;
  const double dz = z_rx - z_tx_;
  double zs[kMaxPathDepth + 2];
  zs[0] = z_tx_;
  double acc = 0.0;
  for (int i = 1; i <= k; ++i) {
    acc += seg[i - 1];
    zs[i] = z_tx_ + dz * (acc / total);
    const WallRel& w = walls_[wall_of[i]];
    if (!(zs[i] > w.base && zs[i] < w.top)) return false;
  }
  zs[k + 1] = z_rx;
  for (int i = 0; i <= k; ++i)
    if (!segment_clear(grid_, off_, pts[i], zs[i], pts[i + 1], zs[i + 1])) return false;

  const double lm = total * res_;
  const double d3 = std::sqrt(lm * lm + dz * dz);
  out.amplitude = free_space(d3) * std::pow(cfg_.material.reflection_coeff, k);
  out.delay_s = d3 / kSpeedOfLight;
  out.interaction_count = k;
  out.kind = PathKind::reflected;
  return true;
}

ChannelImpulseResponse Tracer::trace(Vec2 rx, double z_rx) const {
  ChannelImpulseResponse cir;
  const Vec2 tx{};
  const double dz = z_rx - z_tx_;
  const double lm = length(rx) * res_;
  const double d3 = std::sqrt(lm * lm + dz * dz);

  const bool los = d3 > 0.0 && segment_clear(grid_, off_, tx, z_tx_, rx, z_rx);
  if (los) cir.components.push_back({free_space(d3), d3 / kSpeedOfLight, 0, PathKind::los});

  if (!nodes_.empty()) {
    thread_local std::vector<std::uint8_t> key_seen;
    thread_local std::vector<int> touched;
    if (key_seen.size() < static_cast<std::size_t>(n_keys_)) key_seen.resize(n_keys_, 0);
    touched.clear();
    PathComponent pc;
    for (int n = 0; n < static_cast<int>(nodes_.size()); ++n) {
      const Node& node = nodes_[n];
      const WallRel& w = walls_[node.wall];
      // cheap rejection before the full back-trace
      const double pa = along(w, rx);
      if ((pa - w.line) * w.facing <= 0.0) continue;
      const double ia = along(w, node.image);
      const double s = (w.line - pa) / (ia - pa);
      const double pb = across(w, rx);
      const double c = pb + s * (across(w, node.image) - pb);
      if (c < w.lo || c > w.hi) continue;
      if (key_seen[node.key]) continue;
      if (!reflection_path(n, rx, z_rx, pc)) continue;
      key_seen[node.key] = 1;
      touched.push_back(node.key);
      cir.components.push_back(pc);
    }
    for (int key : touched) key_seen[key] = 0;
  }

  if (!los && cfg_.diffraction_enabled && d3 > 0.0) {
    // Dominant knife edge: the crossing on the direct transect with the
    // largest Fresnel parameter, taking the taller of the adjacent cells.
    thread_local std::vector<std::pair<double, double>> edges;
    edges.clear();
    auto add = [&](int i, int j, double t) {
      if (t > 0.0 && t < 1.0 && grid_.in_bounds(i, j)) edges.emplace_back(t, grid_.at(i, j));
    };
    walk_segment(
        off_, tx, rx,
        [&](int i, int j, double t0, double t1) {
          add(i, j, t0);
          add(i, j, t1);
          return true;
        },
        [&](int i, int j, double t) {
          add(i, j, t);
          return true;
        });
    std::sort(edges.begin(), edges.end());
    double best_nu = -std::numeric_limits<double>::infinity(), best_t = 0.0, best_h = 0.0;
    for (std::size_t a = 0; a < edges.size();) {
      std::size_t b = a;
      double hmax = edges[a].second;
      while (b < edges.size() && edges[b].first == edges[a].first) hmax = std::max(hmax, edges[b++].second);
      const double t = edges[a].first;
      const double nu = fresnel_parameter(hmax - (z_tx_ + dz * t), t * d3, (1.0 - t) * d3, lambda_);
      if (nu > best_nu) {
        best_nu = nu;
        best_t = t;
        best_h = hmax;
      }
      a = b;
    }
    if (!edges.empty()) {
      const double h1 = best_h - z_tx_, h2 = best_h - z_rx;
      const double l1 = best_t * lm, l2 = (1.0 - best_t) * lm;
      const double dd = std::sqrt(l1 * l1 + h1 * h1) + std::sqrt(l2 * l2 + h2 * h2);
      const double loss = std::pow(10.0, -knife_edge_loss_db(best_nu) / 20.0);
      cir.components.push_back({free_space(dd) * loss, dd / kSpeedOfLight, 1, PathKind::diffracted});
    }
  }

  std::sort(cir.components.begin(), cir.components.end(), [](const PathComponent& a, const PathComponent& b) {
    if (a.delay_s != b.delay_s) return a.delay_s < b.delay_s;
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.interaction_count != b.interaction_count) return a.interaction_count < b.interaction_count;
    return std::norm(a.amplitude) < std::norm(b.amplitude);
  });
  return cir;
}

namespace {

Vec2 tx_offset(const ElevationGrid& grid, Point2 tx) {
  const double res = grid.resolution_m();
  return {snap_half((tx.x - grid.origin().x) / res), snap_half((tx.y - grid.origin().y) / res)};
}

}  // namespace

}  // namespace detail

ChannelImpulseResponse trace_paths(const Scene& scene, Point3 tx, Point3 rx, const PropagationConfig& cfg) {
  const auto& grid = scene.grid();
  if (!grid.contains({tx.x, tx.y}) || !grid.contains({rx.x, rx.y}))
    throw std::invalid_argument("tx and rx must lie inside the grid");
  const detail::Vec2 off = detail::tx_offset(grid, {tx.x, tx.y});
  const double res = grid.resolution_m();
  const detail::Vec2 rxa{detail::snap_half((rx.x - grid.origin().x) / res),
                         detail::snap_half((rx.y - grid.origin().y) / res)};
  const detail::Tracer tracer(scene, off, tx.z, cfg);
  return tracer.trace({rxa.x - off.x, rxa.y - off.y}, rx.z);
}

GainField trace_gain_field(const Scene& scene, const TxLocation& tx, const PropagationConfig& cfg) {
  cfg.validate();
  const auto& grid = scene.grid();
  if (!grid.contains(tx.position)) throw std::invalid_argument("tx lies outside the grid");
  if (!(tx.height_m >= 0.0)) throw std::invalid_argument("tx height must be non-negative");
  const CellIndex tc = grid.cell_of(tx.position);
  if (scene.is_footprint(tc.i, tc.j)) throw std::invalid_argument("tx lies inside a building footprint");

  const auto start = std::chrono::steady_clock::now();
  const detail::Vec2 off = detail::tx_offset(grid, tx.position);
  const double z_tx = grid.at(tc) + tx.height_m;
  const int w = grid.width_px(), h = grid.height_px();

  GainField field;
  field.width_px = w;
  field.height_px = h;
  field.tx_cell = tc;
  field.gain_db.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN());

  const detail::Tracer tracer(scene, off, z_tx, cfg);
  parallel_for(static_cast<std::size_t>(h), cfg.jobs, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    for (int i = 0; i < w; ++i) {
      if (scene.is_footprint(i, j) || (i == tc.i && j == tc.j)) continue;
      const detail::Vec2 rx{i + 0.5 - off.x, j + 0.5 - off.y};
      const double z_rx = grid.at(i, j) + cfg.rx_height_m;
      field.gain_db[static_cast<std::size_t>(j) * w + i] = path_gain_db_unclamped(tracer.trace(rx, z_rx));
    }
  });
  field.trace_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return field;
}

RadioMap radio_map_from_field(const Scene& scene, const TxLocation& tx, const GainField& field) {
  const auto& grid = scene.grid();
  RadioMap map;
  map.width_px = field.width_px;
  map.height_px = field.height_px;
  map.resolution_m = grid.resolution_m();
  map.origin = grid.origin();
  map.tx = tx;
  map.gains_db.resize(field.gain_db.size());
  for (std::size_t k = 0; k < field.gain_db.size(); ++k) map.gains_db[k] = static_cast<float>(clamp_gain_db(field.gain_db[k]));
  map.gains_db[static_cast<std::size_t>(field.tx_cell.j) * field.width_px + field.tx_cell.i] = static_cast<float>(kGainCeilDb);
  return map;
}

RadioMap compute_radio_map(const Scene& scene, const TxLocation& tx, const PropagationConfig& cfg) {
  return radio_map_from_field(scene, tx, trace_gain_field(scene, tx, cfg));
}

RadioMap compute_radio_map(const ElevationGrid& grid, const TxLocation& tx, const PropagationConfig& cfg) {
  return compute_radio_map(Scene(grid), tx, cfg);
}

}  // namespace radiomap
