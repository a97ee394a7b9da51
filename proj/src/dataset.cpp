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

#include "radiomap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <set>
#include <stdexcept>

#include "radiomap/io.hpp"
#include "radiomap/parallel.hpp"
#include "radiomap/random.hpp"

namespace radiomap {

namespace fs = std::filesystem;

// Seed streams derived from the master seed.
namespace {
constexpr std::uint64_t kStreamCity = 0;
constexpr std::uint64_t kStreamTx = 1;
constexpr std::uint64_t kStreamExtent = 2;
constexpr std::uint64_t kStreamFolds = 3;
}  // namespace

void DatasetConfig::validate() const {
  city.validate();
  propagation.validate();
  if (n_scenes < 1) throw std::invalid_argument("n_scenes must be >= 1");
  if (n_tx_per_scene < 1) throw std::invalid_argument("n_tx_per_scene must be >= 1");
  if (!(extent_min_m > 0.0) || extent_max_m < extent_min_m) throw std::invalid_argument("invalid extent range");
  if (out_px < 8) throw std::invalid_argument("out_px must be >= 8");
  if (tx_height_m < 0.0) throw std::invalid_argument("tx height must be non-negative");
  if (transforms.empty()) throw std::invalid_argument("transform list must not be empty");
  if (transforms.front() != GeometricTransform::identity)
    throw std::invalid_argument("transform list must start with identity");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (folds > n_scenes * n_tx_per_scene) throw std::invalid_argument("more folds than base scenarios");
}

nlohmann::json DatasetConfig::to_json() const {
  json t = json::array();
  for (auto x : transforms) t.push_back(to_string(x));
  return {{"city", city.to_json()},
          {"n_scenes", n_scenes},
          {"n_tx_per_scene", n_tx_per_scene},
          {"extent_min_m", extent_min_m},
          {"extent_max_m", extent_max_m},
          {"out_px", out_px},
          {"tx_height_m", tx_height_m},
          {"propagation", propagation.to_json()},
          {"transforms", t},
          {"folds", folds}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& doc) {
  DatasetConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "city") c.city = CityParams::from_json(*it);
    else if (k == "n_scenes") c.n_scenes = it->get<int>();
    else if (k == "n_tx_per_scene") c.n_tx_per_scene = it->get<int>();
    else if (k == "extent_min_m") c.extent_min_m = it->get<double>();
    else if (k == "extent_max_m") c.extent_max_m = it->get<double>();
    else if (k == "out_px") c.out_px = it->get<int>();
    else if (k == "tx_height_m") c.tx_height_m = it->get<double>();
    else if (k == "propagation") c.propagation = PropagationConfig::from_json(*it);
    else if (k == "folds") c.folds = it->get<int>();
    else if (k == "transforms") {
      c.transforms.clear();
      for (const auto& t : *it) c.transforms.push_back(transform_from_string(t.get<std::string>()));
    } else {
      throw std::invalid_argument("unknown dataset key: " + k);
    }
  }
  c.validate();
  return c;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  throw std::logic_error("unknown split");
}

// ---------------------------------------------------------------------------

std::vector<int> DatasetManifest::base_indices() const {
  std::set<int> s;
  for (const auto& r : samples) s.insert(r.base_index);
  return {s.begin(), s.end()};
}

nlohmann::json DatasetManifest::to_json() const {
  json recs = json::array();
  for (const auto& r : samples)
    recs.push_back({{"id", r.id},
                    {"base_index", r.base_index},
                    {"scene_id", r.scene_id},
                    {"tx", {{"x_m", r.tx.position.x}, {"y_m", r.tx.position.y}, {"height_m", r.tx.height_m}}},
                    {"extent_m", r.extent_m},
                    {"transform", to_string(r.transform)},
                    {"input", r.input_stem},
                    {"target", r.target_stem},
                    {"fold", r.fold},
                    {"split", to_string(r.split)}});
  json skip = json::array();
  for (const auto& s : skipped) skip.push_back({{"base_index", s.base_index}, {"reason", s.reason}});
  return {{"version", version}, {"master_seed", master_seed}, {"config", config}, {"config_hash", config_hash},
          {"folds", folds},     {"samples", recs},            {"skipped", skip}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& doc) {
  DatasetManifest m;
  try {
    m.version = doc.at("version").get<int>();
    m.master_seed = doc.at("master_seed").get<std::uint64_t>();
    m.config = doc.at("config");
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.folds = doc.at("folds").get<int>();
    for (const auto& r : doc.at("samples")) {
      SampleRecord s;
      s.id = r.at("id").get<std::string>();
      s.base_index = r.at("base_index").get<int>();
      s.scene_id = r.at("scene_id").get<int>();
      const auto& t = r.at("tx");
      s.tx = {{t.at("x_m").get<double>(), t.at("y_m").get<double>()}, t.at("height_m").get<double>()};
      s.extent_m = r.at("extent_m").get<double>();
      s.transform = transform_from_string(r.at("transform").get<std::string>());
      s.input_stem = r.at("input").get<std::string>();
      s.target_stem = r.at("target").get<std::string>();
      s.fold = r.at("fold").get<int>();
      const auto split = r.at("split").get<std::string>();
      if (split == "train") s.split = Split::train;
      else if (split == "val") s.split = Split::val;
      else if (split == "test") s.split = Split::test;
      else throw std::runtime_error("malformed manifest: unknown split " + split);
      m.samples.push_back(std::move(s));
    }
    for (const auto& s : doc.at("skipped")) m.skipped.push_back({s.at("base_index").get<int>(), s.at("reason").get<std::string>()});
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

// ---------------------------------------------------------------------------

FoldAssignment::FoldAssignment(std::vector<int> bases, int k, std::uint64_t seed) : k_(k), order_(std::move(bases)) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (static_cast<std::size_t>(k) > order_.size())
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(order_.size()) +
                                " base scenarios");
  std::sort(order_.begin(), order_.end());
  Rng rng(seed);
  for (std::size_t i = order_.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order_[i - 1], order_[pick(rng)]);
  }
  const std::size_t n = order_.size();
  group_.reserve(n);
  for (std::size_t p = 0; p < n; ++p) group_.push_back({static_cast<int>(p * k / n), static_cast<int>(p)});
}

int FoldAssignment::fold_of(int base) const {
  for (std::size_t p = 0; p < order_.size(); ++p)
    if (order_[p] == base) return group_[p].first;
  throw std::out_of_range("unknown base scenario " + std::to_string(base));
}

int FoldAssignment::position_in_rotation(int base, int rotation) const {
  // position of `base` when groups are listed starting at group `rotation`
  const std::size_t n = order_.size();
  std::size_t start = 0;  // first position of group `rotation`
  while (start < n && group_[start].first < rotation % k_) ++start;
  for (std::size_t p = 0; p < n; ++p)
    if (order_[p] == base) return static_cast<int>((p + n - start) % n);
  throw std::out_of_range("unknown base scenario " + std::to_string(base));
}

Split FoldAssignment::split_of(int base, int rotation) const {
  const auto n = static_cast<double>(order_.size());
  const int n_train = static_cast<int>(std::lround(0.70 * n));
  const int n_val = static_cast<int>(std::lround(0.15 * n));
  const int pos = position_in_rotation(base, rotation);
  if (pos < n_train) return Split::train;
  if (pos < n_train + n_val) return Split::val;
  return Split::test;
}

std::vector<int> FoldAssignment::bases_in(Split s, int rotation) const {
  std::vector<int> out;
  for (int b : order_)
    if (split_of(b, rotation) == s) out.push_back(b);
  std::sort(out.begin(), out.end());
  return out;
}

FoldAssignment split_kfold(const DatasetManifest& manifest, int k, std::uint64_t seed) {
  return FoldAssignment(manifest.base_indices(), k, seed);
}

FoldAssignment manifest_folds(const DatasetManifest& manifest) {
  return split_kfold(manifest, manifest.folds, derive_seed(manifest.master_seed, {kStreamFolds}));
}

// ---------------------------------------------------------------------------

std::vector<ElevationGrid> make_cities(const DatasetConfig& cfg, std::uint64_t master_seed) {
  std::vector<ElevationGrid> cities;
  for (int s = 0; s < cfg.n_scenes; ++s)
    cities.push_back(synth_city(cfg.city, derive_seed(master_seed, {kStreamCity, static_cast<std::uint64_t>(s)})));
  return cities;
}

std::vector<BaseScenario> draw_base_scenarios(const DatasetConfig& cfg, const std::vector<ElevationGrid>& cities,
                                              std::uint64_t master_seed) {
  std::vector<BaseScenario> bases;
  for (std::size_t s = 0; s < cities.size(); ++s) {
    const auto txs = sample_tx_locations(cities[s], cfg.n_tx_per_scene, derive_seed(master_seed, {kStreamTx, s}),
                                         cfg.tx_height_m);
    for (const auto& tx : txs) {
      const auto b = static_cast<std::uint64_t>(bases.size());
      Rng rng = make_rng(master_seed, {kStreamExtent, b});
      std::uniform_real_distribution<double> extent(cfg.extent_min_m, cfg.extent_max_m);
      bases.push_back({static_cast<int>(s), tx, cfg.extent_min_m == cfg.extent_max_m ? cfg.extent_min_m : extent(rng)});
    }
  }
  return bases;
}

namespace {

std::string sample_id(int base, GeometricTransform t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "b%05d_", base);
  return buf + to_string(t);
}

Raster input_raster(const NormalizedImage& img, const ElevationGrid& window) {
  Raster r;
  r.header = {img.size_px, img.size_px, img.resolution_m, window.origin().x, window.origin().y,
              json{{"quantity", "elevation_normalized_inverted"},
                   {"height_min_m", img.height_min_m},
                   {"height_max_m", img.height_max_m}}};
  r.values = img.values;
  return r;
}

Raster target_raster(const RadioMap& map) {
  Raster r = to_raster(map);
  r.header.extra["quantity"] = "path_gain_normalized";
  r.header.extra["db_floor"] = kGainFloorDb;
  r.header.extra["db_range"] = kTargetRangeDb;
  for (auto& v : r.values) v = static_cast<float>(normalize_gain_db(v));
  return r;
}

}  // namespace

std::string grid_digest(const ElevationGrid& grid) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const int dims[2] = {grid.width_px(), grid.height_px()};
  const double geo[3] = {grid.resolution_m(), grid.origin().x, grid.origin().y};
  feed(dims, sizeof dims);
  feed(geo, sizeof geo);
  feed(grid.heights().data(), grid.heights().size_bytes());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

DatasetManifest generate(const DatasetConfig& cfg, const std::vector<ElevationGrid>& cities, json config,
                         const fs::path& out_dir, std::uint64_t master_seed, int jobs) {
  fs::create_directories(out_dir / "samples");
  const auto bases = draw_base_scenarios(cfg, cities, master_seed);

  std::vector<std::vector<SampleRecord>> per_base(bases.size());
  std::vector<std::string> failure(bases.size());
  PropagationConfig pcfg = cfg.propagation;
  pcfg.jobs = 1;  // parallelism is across base scenarios

  parallel_for(bases.size(), jobs, [&](std::size_t b) {
    const auto& base = bases[b];
    try {
      const auto window = resample_window(cities[base.scene_id], base.tx, base.extent_m, cfg.out_px);
      const auto wtx = window_tx(window, base.tx);
      const auto map = compute_radio_map(window, wtx, pcfg);
      const auto image = normalize_elevation(window);
      for (auto t : cfg.transforms) {
        SampleRecord rec;
        rec.id = sample_id(static_cast<int>(b), t);
        rec.base_index = static_cast<int>(b);
        rec.scene_id = base.scene_id;
        rec.tx = base.tx;
        rec.extent_m = base.extent_m;
        rec.transform = t;
        rec.input_stem = "samples/" + rec.id + ".input";
        rec.target_stem = "samples/" + rec.id + ".target";
        // the oracle is exactly equivariant, so variants permute the base pair
        save_raster(out_dir / rec.input_stem, input_raster(apply_transform(image, t), window));
        save_raster(out_dir / rec.target_stem, target_raster(apply_transform(map, t)));
        per_base[b].push_back(std::move(rec));
      }
    } catch (const std::exception& e) {
      per_base[b].clear();
      failure[b] = e.what();
    }
  });

  DatasetManifest m;
  m.master_seed = master_seed;
  m.config = std::move(config);
  m.config_hash = hash_json(m.config);
  m.folds = cfg.folds;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    if (!failure[b].empty()) {
      std::cerr << "skipping base scenario " << b << ": " << failure[b] << "\n";
      m.skipped.push_back({static_cast<int>(b), failure[b]});
    }
    for (auto& r : per_base[b]) m.samples.push_back(std::move(r));
  }
  if (m.base_indices().size() >= static_cast<std::size_t>(cfg.folds)) {
    const auto folds = manifest_folds(m);
    for (auto& r : m.samples) {
      r.fold = folds.fold_of(r.base_index);
      r.split = folds.split_of(r.base_index, 0);
    }
  }
  write_json(out_dir / "manifest.json", m.to_json());
  return m;
}

}  // namespace

DatasetManifest generate_dataset(const DatasetConfig& cfg, const fs::path& out_dir, std::uint64_t master_seed,
                                 int jobs) {
  cfg.validate();
  return generate(cfg, make_cities(cfg, master_seed), cfg.to_json(), out_dir, master_seed, jobs);
}

DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::vector<ElevationGrid>& scenes,
                                 const fs::path& out_dir, std::uint64_t master_seed, int jobs) {
  if (scenes.empty()) throw std::invalid_argument("scene list must not be empty");
  DatasetConfig c = cfg;
  c.n_scenes = static_cast<int>(scenes.size());
  c.validate();
  json config = c.to_json();
  config.erase("city");
  json digests = json::array();
  for (const auto& g : scenes) digests.push_back(grid_digest(g));
  config["scenes"] = digests;
  return generate(c, scenes, std::move(config), out_dir, master_seed, jobs);
}

DatasetManifest load_manifest(const fs::path& manifest_path) { return DatasetManifest::from_json(read_json(manifest_path)); }

DatasetSample load_sample(const fs::path& dataset_dir, const SampleRecord& record) {
  DatasetSample s;
  s.record = record;
  const Raster in = load_raster(dataset_dir / record.input_stem);
  const Raster tg = load_raster(dataset_dir / record.target_stem);
  if (in.header.width_px != in.header.height_px || tg.header.width_px != in.header.width_px ||
      tg.header.height_px != in.header.height_px)
    throw std::runtime_error("sample " + record.id + ": input and target shapes differ");
  s.input.size_px = in.header.width_px;
  s.input.resolution_m = in.header.resolution_m;
  s.input.values = in.values;
  s.input.height_min_m = in.header.extra.value("height_min_m", 0.0);
  s.input.height_max_m = in.header.extra.value("height_max_m", 0.0);
  s.target = tg.values;
  s.mask = s.input.footprint_mask();
  for (auto& m : s.mask) m = !m;
  return s;
}

std::vector<DatasetSample> load_samples(const fs::path& dataset_dir, const DatasetManifest& manifest,
                                        const std::vector<int>& bases) {
  const std::set<int> wanted(bases.begin(), bases.end());
  std::vector<DatasetSample> out;
  for (const auto& r : manifest.samples)
    if (wanted.count(r.base_index)) out.push_back(load_sample(dataset_dir, r));
  return out;
}

}  // namespace radiomap
