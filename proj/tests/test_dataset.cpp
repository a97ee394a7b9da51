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
#include <filesystem>
#include <random>
#include <set>

#include <catch_amalgamated.hpp>

#include "radiomap/dataset.hpp"
#include "radiomap/io.hpp"

using namespace radiomap;
namespace fs = std::filesystem;

namespace {

DatasetConfig small_config() {
  DatasetConfig c;
  c.city.width_px = c.city.height_px = 100;
  c.n_scenes = 2;
  c.n_tx_per_scene = 5;
  c.extent_min_m = 400.0;
  c.extent_max_m = 800.0;
  c.out_px = 24;
  c.propagation.max_depth = 2;
  c.folds = 2;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("radiomap_test_dataset_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("Target normalization is affine and invertible", "[dataset]") {
  CHECK(normalize_gain_db(-150.0) == 0.0);
  CHECK(normalize_gain_db(-50.0) == 1.0);
  CHECK(normalize_gain_db(-100.0) == 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> db(-150.0, -50.0);
  for (int n = 0; n < 10000; ++n) {
    const double x = db(rng);
    const double v = normalize_gain_db(x);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(std::abs(denormalize_gain(v) - x) <= 1e-12);
  }
}

TEST_CASE("Generated dataset layout and contents", "[dataset]") {
  const auto cfg = small_config();
  const auto dir = scratch_dir("layout");
  const auto m = generate_dataset(cfg, dir, 11);

  SECTION("ten base scenarios with full augmentation give 60 samples") {
    CHECK(m.samples.size() == 60);
    CHECK(m.skipped.empty());
    CHECK(m.base_indices().size() == 10);
    std::set<std::string> ids;
    for (const auto& r : m.samples) {
      ids.insert(r.id);
      CHECK(fs::exists(raster_header_path(dir / r.input_stem)));
      CHECK(fs::exists(raster_payload_path(dir / r.input_stem)));
      CHECK(fs::exists(raster_header_path(dir / r.target_stem)));
      CHECK(fs::exists(raster_payload_path(dir / r.target_stem)));
    }
    CHECK(ids.size() == 60);
    CHECK(fs::exists(dir / "manifest.json"));
  }

  SECTION("manifest round-trips through JSON") {
    const auto back = load_manifest(dir / "manifest.json");
    CHECK(back.to_json() == m.to_json());
  }

  SECTION("each augmented target is the transformed base target") {
    for (const auto& r : m.samples) {
      if (r.transform == GeometricTransform::identity) continue;
      const auto it = std::find_if(m.samples.begin(), m.samples.end(), [&](const SampleRecord& b) {
        return b.base_index == r.base_index && b.transform == GeometricTransform::identity;
      });
      REQUIRE(it != m.samples.end());
      const auto base = load_sample(dir, *it);
      const auto var = load_sample(dir, r);
      CHECK(var.target == apply_transform(base.target, cfg.out_px, r.transform));
      CHECK(var.input.values == apply_transform(base.input.values, cfg.out_px, r.transform));
    }
  }

  SECTION("stored variants agree with tracing the transformed window") {
    const auto cities = make_cities(cfg, 11);
    const auto bases = draw_base_scenarios(cfg, cities, 11);
    for (const auto& r : m.samples) {
      if (r.base_index % 3 != 0) continue;
      const auto& b = bases[static_cast<std::size_t>(r.base_index)];
      const auto win = resample_window(cities[b.scene_id], b.tx, b.extent_m, cfg.out_px);
      const auto wtx = window_tx(win, b.tx);
      const auto map = compute_radio_map(apply_transform(win, r.transform),
                                         apply_transform(wtx, win, r.transform), cfg.propagation);
      const auto stored = load_sample(dir, r);
      REQUIRE(stored.target.size() == map.gains_db.size());
      for (std::size_t k = 0; k < map.gains_db.size(); ++k)
        REQUIRE(stored.target[k] == static_cast<float>(normalize_gain_db(map.gains_db[k])));
    }
  }

  SECTION("samples satisfy the pair invariants") {
    for (const auto& r : m.samples) {
      const auto s = load_sample(dir, r);
      CHECK(s.input.size_px == cfg.out_px);
      CHECK(s.target.size() == s.input.values.size());
      CHECK(s.input.resolution_m == Catch::Approx(r.extent_m / cfg.out_px));
      CHECK(std::all_of(s.target.begin(), s.target.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
      const auto fp = s.input.footprint_mask();
      for (std::size_t k = 0; k < fp.size(); ++k) {
        CHECK(s.mask[k] == !fp[k]);
        if (fp[k]) CHECK(s.target[k] == 0.0f);
      }
      const int c = center_index(cfg.out_px);
      const auto tx = transform_cell({c, c}, cfg.out_px, r.transform);
      CHECK(s.target[static_cast<std::size_t>(tx.j) * cfg.out_px + tx.i] == 1.0f);
    }
  }

  SECTION("variants of one base share scene, tx and extent") {
    for (const auto& a : m.samples)
      for (const auto& b : m.samples)
        if (a.base_index == b.base_index) {
          CHECK(a.scene_id == b.scene_id);
          CHECK(a.tx.position.x == b.tx.position.x);
          CHECK(a.tx.position.y == b.tx.position.y);
          CHECK(a.extent_m == b.extent_m);
          CHECK(a.fold == b.fold);
          CHECK(a.split == b.split);
        }
  }
  fs::remove_all(dir);
}

TEST_CASE("Dataset generation is deterministic", "[dataset]") {
  const auto cfg = small_config();
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  const auto ma = generate_dataset(cfg, a, 5);
  const auto mb = generate_dataset(cfg, b, 5, 3);
  CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
  for (const auto& r : ma.samples) {
    CHECK(read_file(raster_payload_path(a / r.target_stem)) == read_file(raster_payload_path(b / r.target_stem)));
    CHECK(read_file(raster_payload_path(a / r.input_stem)) == read_file(raster_payload_path(b / r.input_stem)));
  }
  const auto c = scratch_dir("det_c");
  const auto mc = generate_dataset(cfg, c, 6);
  CHECK(read_file(a / "manifest.json") != read_file(c / "manifest.json"));
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("Extents are drawn from the configured range", "[dataset]") {
  auto cfg = small_config();
  cfg.n_tx_per_scene = 200;
  cfg.n_scenes = 1;
  const auto cities = make_cities(cfg, 2);
  const auto bases = draw_base_scenarios(cfg, cities, 2);
  REQUIRE(bases.size() == 200);
  double lo = 1e9, hi = 0.0;
  for (const auto& b : bases) {
    lo = std::min(lo, b.extent_m);
    hi = std::max(hi, b.extent_m);
    CHECK(!cities[0].is_footprint(cities[0].cell_of(b.tx.position).i, cities[0].cell_of(b.tx.position).j));
  }
  CHECK(lo >= cfg.extent_min_m);
  CHECK(hi <= cfg.extent_max_m);
  CHECK(lo < cfg.extent_min_m + 20.0);
  CHECK(hi > cfg.extent_max_m - 20.0);
}

TEST_CASE("Manifest hash tracks the generator config", "[dataset]") {
  const auto base = small_config();
  const auto h0 = hash_json(base.to_json());
  CHECK(hash_json(small_config().to_json()) == h0);

  std::vector<DatasetConfig> changed(11, base);
  changed[0].city.density = 0.4;
  changed[1].n_scenes = 3;
  changed[2].n_tx_per_scene = 6;
  changed[3].extent_min_m = 450.0;
  changed[4].extent_max_m = 900.0;
  changed[5].out_px = 32;
  changed[6].tx_height_m = 12.0;
  changed[7].propagation.max_depth = 3;
  changed[8].propagation.diffraction_enabled = false;
  changed[9].transforms = {GeometricTransform::identity};
  changed[10].folds = 3;
  std::set<std::string> hashes{h0};
  for (const auto& c : changed) hashes.insert(hash_json(c.to_json()));
  CHECK(hashes.size() == changed.size() + 1);

  const auto dir = scratch_dir("hash");
  const auto m = generate_dataset(base, dir, 1);
  CHECK(m.config_hash == h0);
  fs::remove_all(dir);
}

TEST_CASE("Dataset over caller-supplied scenes", "[dataset]") {
  auto cfg = small_config();
  cfg.n_tx_per_scene = 2;
  const auto scenes = make_cities(cfg, 9);
  const auto dir = scratch_dir("scenes");
  const auto m = generate_dataset(cfg, scenes, dir, 9);
  CHECK(m.samples.size() == 2 * 2 * 6);
  CHECK(m.config.contains("scenes"));
  CHECK(!m.config.contains("city"));

  auto other = scenes;
  std::vector<float> h(other[1].heights().begin(), other[1].heights().end());
  h[123] += 1.0f;
  other[1] = ElevationGrid(other[1].width_px(), other[1].height_px(), other[1].resolution_m(), other[1].origin(), h);
  const auto dir2 = scratch_dir("scenes2");
  const auto m2 = generate_dataset(cfg, other, dir2, 9);
  CHECK(m2.config_hash != m.config_hash);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("Dataset config JSON", "[dataset]") {
  const auto c = small_config();
  const auto back = DatasetConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  auto doc = c.to_json();
  doc["typo"] = 1;
  CHECK_THROWS_AS(DatasetConfig::from_json(doc), std::invalid_argument);
  auto bad = c;
  bad.extent_max_m = 100.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.transforms = {GeometricTransform::rot90};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("k-fold split over base scenarios", "[dataset]") {
  std::vector<int> bases(100);
  for (int i = 0; i < 100; ++i) bases[i] = 1000 + 3 * i;  // ids need not be contiguous
  const FoldAssignment f(bases, 5, 42);

  SECTION("70/15/15 per rotation, partition and completeness") {
    for (int r = 0; r < 5; ++r) {
      const auto tr = f.bases_in(Split::train, r);
      const auto va = f.bases_in(Split::val, r);
      const auto te = f.bases_in(Split::test, r);
      CHECK(tr.size() == 70);
      CHECK(va.size() == 15);
      CHECK(te.size() == 15);
      std::set<int> all(tr.begin(), tr.end());
      for (int b : va) CHECK(all.insert(b).second);
      for (int b : te) CHECK(all.insert(b).second);
      CHECK(all == std::set<int>(bases.begin(), bases.end()));
    }
  }

  SECTION("folds partition bases and test sets rotate") {
    std::vector<int> per_fold(5, 0);
    for (int b : bases) {
      const int g = f.fold_of(b);
      REQUIRE(g >= 0);
      REQUIRE(g < 5);
      ++per_fold[g];
    }
    for (int n : per_fold) CHECK(n == 20);
    std::set<int> tested;
    for (int r = 0; r < 5; ++r)
      for (int b : f.bases_in(Split::test, r)) CHECK(tested.insert(b).second);
    CHECK(tested.size() == 75);
  }

  SECTION("split is a function of the base, so variants cannot leak") {
    DatasetManifest m;
    for (int b : bases)
      for (auto t : kAllTransforms) {
        SampleRecord r;
        r.base_index = b;
        r.transform = t;
        m.samples.push_back(r);
      }
    const auto g = split_kfold(m, 5, 42);
    for (int r = 0; r < 5; ++r) {
      std::set<int> train, other;
      for (const auto& s : m.samples) (g.split_of(s.base_index, r) == Split::train ? train : other).insert(s.base_index);
      for (int b : train) CHECK(other.count(b) == 0);
      CHECK(train.size() == 70);
    }
  }

  SECTION("deterministic in the seed") {
    const FoldAssignment same(bases, 5, 42);
    const FoldAssignment diff(bases, 5, 43);
    CHECK(same.bases_in(Split::test, 2) == f.bases_in(Split::test, 2));
    CHECK(diff.bases_in(Split::test, 2) != f.bases_in(Split::test, 2));
  }

  SECTION("errors") {
    CHECK_THROWS_AS(FoldAssignment(bases, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(FoldAssignment(std::vector<int>{1, 2, 3}, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(f.fold_of(7), std::out_of_range);
  }
}
