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

#include "radiomap/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "radiomap/dataset.hpp"
#include "radiomap/io.hpp"
#include "radiomap/parallel.hpp"

namespace radiomap {

std::string to_string(Provenance p) { return p == Provenance::imported ? "imported" : "synthetic_reality"; }

Provenance provenance_from_string(const std::string& s) {
  if (s == "synthetic_reality") return Provenance::synthetic_reality;
  if (s == "imported") return Provenance::imported;
  throw std::invalid_argument("unknown provenance: " + s);
}

void MeasurementSet::validate(const ElevationGrid& grid) const {
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (!(p.path_gain_db >= kGainFloorDb && p.path_gain_db <= kGainCeilDb))
      throw std::invalid_argument("measurement " + std::to_string(k) + " has path gain " +
                                  format_double(p.path_gain_db) + " dB outside [-150, -50]");
    if (!grid.contains(p.position))
      throw std::invalid_argument("measurement " + std::to_string(k) + " lies outside the scene");
  }
}

void save_measurements(const std::filesystem::path& stem, const MeasurementSet& m) {
  CsvWriter csv({"x_m", "y_m", "path_gain_db"});
  for (const auto& p : m.points)
    csv.add_row({format_double(p.position.x), format_double(p.position.y), format_double(p.path_gain_db)});
  auto csv_path = stem;
  csv_path += ".csv";
  auto json_path = stem;
  json_path += ".json";
  csv.save(csv_path);
  write_json(json_path, {{"scene_id", m.scene_id},
                         {"provenance", to_string(m.provenance)},
                         {"seed", m.seed},
                         {"points", m.points.size()}});
}

MeasurementSet load_measurements(const std::filesystem::path& stem) {
  auto csv_path = stem;
  csv_path += ".csv";
  auto json_path = stem;
  json_path += ".json";
  MeasurementSet m;
  const auto doc = read_json(json_path);
  m.scene_id = doc.value("scene_id", 0);
  m.provenance = provenance_from_string(doc.value("provenance", std::string("imported")));
  m.seed = doc.value("seed", std::uint64_t{0});
  const auto t = read_csv(csv_path);
  const int cx = t.column("x_m"), cy = t.column("y_m"), cg = t.column("path_gain_db");
  for (const auto& row : t.rows)
    m.points.push_back({{std::stod(row.at(cx)), std::stod(row.at(cy))}, std::stod(row.at(cg))});
  return m;
}

// ---------------------------------------------------------------------------

void Perturbation::validate() const {
  if (!std::isfinite(reflection_offset) || !std::isfinite(bias_db))
    throw std::invalid_argument("perturbation offsets must be finite");
  if (!(noise_sigma_db >= 0.0) || !std::isfinite(noise_sigma_db))
    throw std::invalid_argument("noise_sigma_db must be >= 0");
  if (!(correlation_cells >= 0.0) || !std::isfinite(correlation_cells))
    throw std::invalid_argument("correlation_cells must be >= 0");
}

nlohmann::json Perturbation::to_json() const {
  return {{"reflection_offset", reflection_offset},
          {"bias_db", bias_db},
          {"noise_sigma_db", noise_sigma_db},
          {"correlation_cells", correlation_cells}};
}

Perturbation Perturbation::from_json(const nlohmann::json& doc) {
  Perturbation p;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "reflection_offset") p.reflection_offset = it->get<double>();
    else if (k == "bias_db") p.bias_db = it->get<double>();
    else if (k == "noise_sigma_db") p.noise_sigma_db = it->get<double>();
    else if (k == "correlation_cells") p.correlation_cells = it->get<double>();
    else throw std::invalid_argument("unknown perturbation key: " + k);
  }
  p.validate();
  return p;
}

std::vector<double> correlated_noise(int width, int height, double correlation_cells, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> out(n);
  if (correlation_cells == 0.0) {
    for (auto& v : out) v = normal(rng);
    return out;
  }
  const int r = static_cast<int>(std::ceil(3.0 * correlation_cells));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) sum += k[t + r] = std::exp(-0.5 * t * t / (correlation_cells * correlation_cells));
  double sq = 0.0;
  for (auto& v : k) {
    v /= sum;
    sq += v * v;
  }
  // Padded white field so every output cell sees the full kernel.
  const int pw = width + 2 * r, ph = height + 2 * r;
  std::vector<double> z(static_cast<std::size_t>(pw) * ph);
  for (auto& v : z) v = normal(rng);
  std::vector<double> tmp(static_cast<std::size_t>(width) * ph, 0.0);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int t = 0; t <= 2 * r; ++t) s += k[t] * z[static_cast<std::size_t>(y) * pw + x + t];
      tmp[static_cast<std::size_t>(y) * width + x] = s;
    }
  // The 2-D kernel's squared norm is sq^2, so dividing by sq restores unit variance.
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int t = 0; t <= 2 * r; ++t) s += k[t] * tmp[static_cast<std::size_t>(y + t) * width + x];
      out[static_cast<std::size_t>(y) * width + x] = s / sq;
    }
  return out;
}

std::vector<Point2> random_walk_route(const ElevationGrid& grid, const TxLocation& tx, int n_points, Rng& rng) {
  if (n_points < 1) throw std::invalid_argument("route needs at least one point");
  const CellIndex tc = grid.cell_of(tx.position);
  auto open = [&](Point2 p) {
    if (!grid.contains(p)) return false;
    const CellIndex c = grid.cell_of(p);
    return !grid.is_footprint(c.i, c.j) && !(c == tc);
  };
  // Start cells: the largest 4-connected open region, so the walk cannot be
  // trapped in a courtyard.
  const int w = grid.width_px(), h = grid.height_px();
  std::vector<int> comp(static_cast<std::size_t>(w) * h, -1);
  std::vector<CellIndex> cells, stack;
  for (int j0 = 0; j0 < h; ++j0)
    for (int i0 = 0; i0 < w; ++i0) {
      if (comp[static_cast<std::size_t>(j0) * w + i0] >= 0 || !open(grid.cell_center(i0, j0))) continue;
      std::vector<CellIndex> members;
      stack.assign(1, {i0, j0});
      comp[static_cast<std::size_t>(j0) * w + i0] = 1;
      while (!stack.empty()) {
        const CellIndex c = stack.back();
        stack.pop_back();
        members.push_back(c);
        const CellIndex nb[] = {{c.i + 1, c.j}, {c.i - 1, c.j}, {c.i, c.j + 1}, {c.i, c.j - 1}};
        for (const auto& q : nb) {
          if (!grid.in_bounds(q.i, q.j)) continue;
          auto& mark = comp[static_cast<std::size_t>(q.j) * w + q.i];
          if (mark >= 0 || !open(grid.cell_center(q.i, q.j))) continue;
          mark = 1;
          stack.push_back(q);
        }
      }
      if (members.size() > cells.size()) cells = std::move(members);
    }
  if (cells.empty()) throw std::invalid_argument("scene has no open cells for a measurement route");
  std::sort(cells.begin(), cells.end(), [](CellIndex a, CellIndex b) { return a.j != b.j ? a.j < b.j : a.i < b.i; });

  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> turn(0.0, 0.4);
  const CellIndex start = cells[pick(rng)];
  Point2 pos = grid.cell_center(start.i, start.j);
  double heading = angle(rng);
  const double step = grid.resolution_m();
  std::vector<Point2> route;
  route.reserve(static_cast<std::size_t>(n_points));
  for (int s = 0; s < n_points; ++s) {
    route.push_back(pos);
    for (int attempt = 0; attempt < 32; ++attempt) {
      const double h = attempt == 0 ? heading + turn(rng) : angle(rng);
      const Point2 next{pos.x + step * std::cos(h), pos.y + step * std::sin(h)};
      if (open(next)) {
        pos = next;
        heading = h;
        break;
      }
    }
  }
  return route;
}

SyntheticReality synth_reality(const ElevationGrid& grid, const TxLocation& tx, const PropagationConfig& cfg,
                               const Perturbation& perturbation, int n_points, std::uint64_t seed, int scene_id) {
  perturbation.validate();
  PropagationConfig pcfg = cfg;
  pcfg.material.reflection_coeff += perturbation.reflection_offset;
  if (!(pcfg.material.reflection_coeff > 0.0 && pcfg.material.reflection_coeff < 1.0))
    throw std::invalid_argument("perturbed reflection coefficient " + format_double(pcfg.material.reflection_coeff) +
                                " is outside (0, 1)");
  if (perturbation.reflection_offset != 0.0) pcfg.material.name += "_perturbed";

  SyntheticReality r;
  r.truth = compute_radio_map(grid, tx, pcfg);
  const int w = grid.width_px(), h = grid.height_px();
  const CellIndex tc = grid.cell_of(tx.position);
  std::vector<double> noise;
  if (perturbation.noise_sigma_db > 0.0) {
    Rng nrng = make_rng(seed, {1});
    noise = correlated_noise(w, h, perturbation.correlation_cells, nrng);
  }
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      if (grid.is_footprint(i, j) || CellIndex{i, j} == tc) continue;
      const std::size_t k = static_cast<std::size_t>(j) * w + i;
      double v = r.truth.gains_db[k] + perturbation.bias_db;
      if (!noise.empty()) v += perturbation.noise_sigma_db * noise[k];
      r.truth.gains_db[k] = static_cast<float>(clamp_gain_db(v));
    }

  Rng rrng = make_rng(seed, {0});
  r.measurements.scene_id = scene_id;
  r.measurements.provenance = Provenance::synthetic_reality;
  r.measurements.seed = seed;
  for (const Point2& p : random_walk_route(grid, tx, n_points, rrng)) {
    const CellIndex c = grid.cell_of(p);
    r.measurements.points.push_back({p, r.truth.gains_db[static_cast<std::size_t>(c.j) * w + c.i]});
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

double dist2(Point2 a, Point2 b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

}  // namespace

KMeansResult lloyd(std::span<const Point2> points, std::vector<Point2> centers, int max_iterations) {
  if (centers.empty()) throw std::invalid_argument("k-means needs at least one center");
  KMeansResult r;
  r.labels.assign(points.size(), -1);
  const int k = static_cast<int>(centers.size());
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t p = 0; p < points.size(); ++p) {
      int best = 0;
      double bd = dist2(points[p], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = dist2(points[p], centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (r.labels[p] != best) {
        r.labels[p] = best;
        changed = true;
      }
    }
    if (!changed) break;
    r.iterations = iter + 1;
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t p = 0; p < points.size(); ++p) {
      sx[r.labels[p]] += points[p].x;
      sy[r.labels[p]] += points[p].y;
      ++cnt[r.labels[p]];
    }
    for (int c = 0; c < k; ++c)
      if (cnt[c] > 0) centers[c] = {sx[c] / static_cast<double>(cnt[c]), sy[c] / static_cast<double>(cnt[c])};
  }
  r.centers = std::move(centers);
  return r;
}

KMeansResult kmeans(std::span<const Point2> points, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("k-means needs k >= 1");
  if (points.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("k-means with " + std::to_string(k) + " clusters needs at least that many points, got " +
                                std::to_string(points.size()));
  Rng rng(seed);
  std::vector<Point2> centers;
  centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng)]);
  std::vector<double> d(points.size(), std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      d[p] = std::min(d[p], dist2(points[p], centers.back()));
      total += d[p];
    }
    if (!(total > 0.0))
      throw std::invalid_argument("degenerate positions: fewer distinct points than " + std::to_string(k) + " clusters");
    const double u = unit(rng) * total;
    double acc = 0.0;
    std::size_t chosen = points.size();
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (d[p] == 0.0) continue;
      acc += d[p];
      chosen = p;
      if (acc > u) break;
    }
    centers.push_back(points[chosen]);
  }
  return lloyd(points, std::move(centers));
}

void CalibrationConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
  if (!(lambda_meas >= 0.0 && lambda_meas <= 1.0)) throw std::invalid_argument("lambda_meas must be in [0, 1]");
  if (n_clusters < 2) throw std::invalid_argument("n_clusters must be >= 2");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (optimizer == OptimizerKind::adam && !(momentum > 0.0)) throw std::invalid_argument("adam needs momentum > 0");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (route_points < 2) throw std::invalid_argument("route_points must be >= 2");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

nlohmann::json CalibrationConfig::to_json() const {
  return {{"optimizer", to_string(optimizer)},      {"train_fraction", train_fraction}, {"lambda_meas", lambda_meas},     {"n_clusters", n_clusters},
          {"epochs", epochs},                 {"learning_rate", learning_rate}, {"momentum", momentum},
          {"trials", trials},                 {"route_points", route_points},   {"seed", seed}};
}

CalibrationConfig CalibrationConfig::from_json(const nlohmann::json& doc) {
  CalibrationConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "optimizer") c.optimizer = optimizer_from_string(it->get<std::string>());
    else if (k == "train_fraction") c.train_fraction = it->get<double>();
    else if (k == "lambda_meas") c.lambda_meas = it->get<double>();
    else if (k == "n_clusters") c.n_clusters = it->get<int>();
    else if (k == "epochs") c.epochs = it->get<int>();
    else if (k == "learning_rate") c.learning_rate = it->get<double>();
    else if (k == "momentum") c.momentum = it->get<double>();
    else if (k == "trials") c.trials = it->get<int>();
    else if (k == "route_points") c.route_points = it->get<int>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "jobs") c.jobs = it->get<int>();
    else throw std::invalid_argument("unknown calibration key: " + k);
  }
  c.validate();
  return c;
}

GeoSplit geographic_split(const MeasurementSet& m, const CalibrationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = m.points.size();
  if (n < 2) throw std::invalid_argument("a split needs at least 2 measurements");
  if (static_cast<std::size_t>(cfg.n_clusters) > n)
    throw std::invalid_argument(std::to_string(cfg.n_clusters) + " clusters requested for " + std::to_string(n) +
                                " measurements");
  std::vector<Point2> pos(n);
  for (std::size_t p = 0; p < n; ++p) pos[p] = m.points[p].position;
  if (std::all_of(pos.begin(), pos.end(), [&](Point2 q) { return q == pos[0]; }))
    throw std::invalid_argument("degenerate measurements: all positions coincide");

  const auto km = kmeans(pos, cfg.n_clusters, derive_seed(seed, {0}));
  const int k = cfg.n_clusters;
  std::vector<std::size_t> size(k, 0);
  for (int l : km.labels) ++size[l];
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {1});
  std::shuffle(order.begin(), order.end(), rng);

  int best_len = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t acc = 0;
  for (int len = 1; len < k; ++len) {
    acc += size[order[len - 1]];
    if (acc == 0 || acc == n) continue;
    const double gap = std::abs(static_cast<double>(acc) / static_cast<double>(n) - cfg.train_fraction);
    if (gap < best_gap) {
      best_gap = gap;
      best_len = len;
    }
  }
  if (best_len < 0) throw std::invalid_argument("clustering produced a single non-empty cluster");

  GeoSplit s;
  s.cluster_of = km.labels;
  std::vector<std::uint8_t> in_train(k, 0);
  for (int c = 0; c < best_len; ++c) in_train[order[c]] = 1;
  for (int c = 0; c < k; ++c)
    if (in_train[c]) s.train_clusters.push_back(c);
  for (std::size_t p = 0; p < n; ++p) (in_train[km.labels[p]] ? s.train : s.test).push_back(static_cast<int>(p));
  return s;
}

// ---------------------------------------------------------------------------

std::vector<MeasuredCell> measured_cells(const ElevationGrid& grid, std::span<const MeasurementPoint> points) {
  std::vector<MeasuredCell> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!grid.contains(p.position)) throw std::invalid_argument("measurement outside the scene");
    const CellIndex c = grid.cell_of(p.position);
    out.push_back({static_cast<std::size_t>(c.j) * grid.width_px() + c.i,
                   static_cast<float>(normalize_gain_db(p.path_gain_db))});
  }
  return out;
}

namespace {

template <class T>
double calibration_loss_impl(std::span<const T> pred, std::span<const float> sim_target,
                             std::span<const std::uint8_t> mask, std::span<const MeasuredCell> meas, double lambda,
                             std::span<T> grad) {
  const std::size_t n = pred.size();
  if (sim_target.size() != n || mask.size() != n) throw std::invalid_argument("calibration loss: size mismatch");
  if (!grad.empty() && grad.size() != n) throw std::invalid_argument("calibration loss: gradient size mismatch");
  const double ws = 1.0 - lambda;
  double total_w = 0.0;
  for (auto m : mask) total_w += m;
  if (ws > 0.0 && !(total_w > 0.0)) throw std::invalid_argument("calibration loss: empty simulation mask");
  if (lambda > 0.0 && meas.empty()) throw std::invalid_argument("calibration loss: no measurements");

  std::vector<double> g(grad.empty() ? 0 : n, 0.0);
  double sim = 0.0, meas_sum = 0.0;
  if (ws > 0.0)
    for (std::size_t k = 0; k < n; ++k) {
      const double d = static_cast<double>(pred[k]) - sim_target[k];
      const double w = ws * mask[k];
      sim += mask[k] * d * d;
      if (!g.empty()) g[k] = 2.0 * w * d / total_w;
    }
  if (lambda > 0.0) {
    const double nm = static_cast<double>(meas.size());
    for (const auto& c : meas) {
      if (c.index >= n) throw std::invalid_argument("calibration loss: measured cell out of range");
      const double d = static_cast<double>(pred[c.index]) - c.value;
      meas_sum += d * d;
      if (!g.empty()) g[c.index] += 2.0 * lambda * d / nm;
    }
    meas_sum /= nm;
  }
  for (std::size_t k = 0; k < g.size(); ++k) grad[k] = static_cast<T>(g[k]);
  return lambda * meas_sum + (ws > 0.0 ? ws * sim / total_w : 0.0);
}

}  // namespace

double calibration_loss(std::span<const float> pred, std::span<const float> sim_target,
                        std::span<const std::uint8_t> mask, std::span<const MeasuredCell> meas, double lambda,
                        std::span<float> grad) {
  return calibration_loss_impl(pred, sim_target, mask, meas, lambda, grad);
}

double calibration_loss(std::span<const double> pred, std::span<const float> sim_target,
                        std::span<const std::uint8_t> mask, std::span<const MeasuredCell> meas, double lambda,
                        std::span<double> grad) {
  return calibration_loss_impl(pred, sim_target, mask, meas, lambda, grad);
}

FinetuneResult finetune(const Weights& w, const NormalizedImage& elevation, std::span<const float> sim_target,
                        std::span<const MeasuredCell> meas_train, const CalibrationConfig& cfg) {
  cfg.validate();
  if (meas_train.empty()) throw std::invalid_argument("finetune needs at least one training measurement");
  if (elevation.size_px != w.spec().input_px)
    throw std::invalid_argument("image is " + std::to_string(elevation.size_px) + " px, network expects " +
                                std::to_string(w.spec().input_px));
  auto mask = elevation.footprint_mask();
  for (auto& m : mask) m = !m;

  FinetuneResult r;
  r.weights = w;
  Optimizer opt;
  AlignedVector<float> grad(w.parameter_count());
  std::vector<float> dout(elevation.values.size());
  Workspace<float> ws;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    r.weights.forward(elevation.values, ws);
    const double loss = calibration_loss(ws.output(), sim_target, mask, meas_train, cfg.lambda_meas, dout);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "non-finite calibration loss (" << loss << ") at epoch " << epoch + 1 << ", learning rate "
          << cfg.learning_rate;
      throw std::runtime_error(msg.str());
    }
    r.loss.push_back(loss);
    std::fill(grad.begin(), grad.end(), 0.0f);
    r.weights.backward(ws, dout, grad);
    apply_update(cfg.optimizer, opt, r.weights.params(), grad, cfg.learning_rate, cfg.momentum);
  }
  return r;
}

// ---------------------------------------------------------------------------

CalibrationScene make_calibration_scene(const ElevationGrid& window, const TxLocation& tx,
                                        const PropagationConfig& cfg, const Perturbation& perturbation,
                                        int route_points, std::uint64_t seed, int scene_id) {
  CalibrationScene s;
  s.scene_id = scene_id;
  s.window = window;
  s.tx = tx;
  s.elevation = normalize_elevation(window);
  s.simulated = compute_radio_map(window, tx, cfg);
  s.reality = synth_reality(window, tx, cfg, perturbation, route_points, seed, scene_id);
  return s;
}

namespace {

struct TrialOutcome {
  std::vector<PointComparison> points;
  std::string error;
};

std::vector<float> to_db(std::span<const float> v) {
  std::vector<float> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(denormalize_gain(v[k]));
  return out;
}

}  // namespace

CalibrationReport calibration_trials(const std::vector<CalibrationScene>& scenes, const Weights& model,
                                     const CalibrationConfig& cfg) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("no calibration scenes");
  const std::size_t ns = scenes.size();
  std::vector<std::vector<float>> sim_norm(ns), uncal_db(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto& g = scenes[s].simulated.gains_db;
    sim_norm[s].resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) sim_norm[s][k] = static_cast<float>(normalize_gain_db(g[k]));
    uncal_db[s] = to_db(forward(model, scenes[s].elevation));
  }

  const std::size_t tasks = static_cast<std::size_t>(cfg.trials) * ns;
  std::vector<TrialOutcome> out(tasks);
  parallel_for(tasks, cfg.jobs, [&](std::size_t task) {
    const int trial = static_cast<int>(task / ns);
    const std::size_t s = task % ns;
    const auto& sc = scenes[s];
    try {
      const auto& meas = sc.reality.measurements;
      const auto split =
          geographic_split(meas, cfg, derive_seed(cfg.seed, {static_cast<std::uint64_t>(trial), s}));
      std::vector<MeasurementPoint> train_pts;
      for (int p : split.train) train_pts.push_back(meas.points[p]);
      const auto ft = finetune(model, sc.elevation, sim_norm[s], measured_cells(sc.window, train_pts), cfg);
      const auto cal_db = to_db(forward(ft.weights, sc.elevation));
      for (int p : split.test) {
        const auto& mp = meas.points[p];
        const CellIndex c = sc.window.cell_of(mp.position);
        const std::size_t k = static_cast<std::size_t>(c.j) * sc.window.width_px() + c.i;
        out[task].points.push_back({trial, sc.scene_id, mp.position, mp.path_gain_db, sc.simulated.gains_db[k],
                                    uncal_db[s][k], cal_db[k]});
      }
    } catch (const std::exception& e) {
      out[task].points.clear();
      out[task].error = "trial " + std::to_string(trial) + " scene " + std::to_string(sc.scene_id) + ": " + e.what();
    }
  });

  CalibrationReport r;
  r.trials = cfg.trials;
  std::vector<double> eo, eu, ec;
  for (auto& o : out) {
    if (!o.error.empty()) r.failures.push_back(o.error);
    for (const auto& p : o.points) {
      eo.push_back(std::abs(p.oracle_db - p.measured_db) / kTargetRangeDb * 100.0);
      eu.push_back(std::abs(p.uncalibrated_db - p.measured_db) / kTargetRangeDb * 100.0);
      ec.push_back(std::abs(p.calibrated_db - p.measured_db) / kTargetRangeDb * 100.0);
      r.points.push_back(p);
    }
  }
  r.oracle = Ecdf(std::move(eo));
  r.uncalibrated = Ecdf(std::move(eu));
  r.calibrated = Ecdf(std::move(ec));
  return r;
}

nlohmann::json CalibrationReport::summary() const {
  auto med = [](const Ecdf& e) { return e.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.median()); };
  return {{"trials", trials},
          {"failed_tasks", failures.size()},
          {"failures", failures},
          {"test_points", points.size()},
          {"median_error_percent",
           {{"misconfigured_oracle", med(oracle)}, {"uncalibrated", med(uncalibrated)}, {"calibrated", med(calibrated)}}}};
}

std::string CalibrationReport::ecdf_csv() const {
  CsvWriter csv({"method", "error_percent", "cumulative_prob"});
  const std::pair<const char*, const Ecdf*> methods[] = {
      {"misconfigured_oracle", &oracle}, {"uncalibrated", &uncalibrated}, {"calibrated", &calibrated}};
  for (const auto& [name, e] : methods)
    for (const auto& row : e->table())
      csv.add_row({name, format_double(row.value), format_double(row.cumulative_prob)});
  return csv.str();
}

std::string CalibrationReport::points_csv() const {
  CsvWriter csv({"trial", "scene_id", "x_m", "y_m", "measured_db", "oracle_db", "uncalibrated_db", "calibrated_db"});
  for (const auto& p : points)
    csv.add_row({std::to_string(p.trial), std::to_string(p.scene_id), format_double(p.position.x),
                 format_double(p.position.y), format_double(p.measured_db), format_double(p.oracle_db),
                 format_double(p.uncalibrated_db), format_double(p.calibrated_db)});
  return csv.str();
}

}  // namespace radiomap
