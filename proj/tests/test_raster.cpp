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

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <bit>
#include <map>
#include <set>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "radiomap/io.hpp"
#include "radiomap/raster.hpp"

using namespace radiomap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("radiomap_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ElevationGrid random_grid(int w, int h, std::uint64_t seed, double hmax = 40.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, static_cast<float>(hmax));
  std::vector<float> v(static_cast<std::size_t>(w) * h);
  for (auto& x : v) x = u(rng);
  return ElevationGrid(w, h, 10.0, {0.0, 0.0}, std::move(v));
}

}  // namespace

TEST_CASE("Grid I/O round trip and validation", "[raster]") {
  const auto dir = temp_dir("grid_io");

  SECTION("zero grid loads with 16 zero cells") {
    const ElevationGrid g(4, 4, 10.0, {0.0, 0.0}, std::vector<float>(16, 0.0f));
    save_grid(dir / "zeros", g);
    const auto back = load_grid(dir / "zeros");
    REQUIRE(back.cell_count() == 16);
    for (float h : back.heights()) CHECK(h == 0.0f);
  }

  SECTION("round trip is bit exact") {
    const auto g = random_grid(17, 9, 42);
    save_grid(dir / "rand", g);
    const auto back = load_grid(dir / "rand");
    CHECK(back == g);
    CHECK(std::equal(back.heights().begin(), back.heights().end(), g.heights().begin(),
                     [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }));
  }

  SECTION("short payload fails") {
    Raster r;
    r.header = {100, 100, 10.0, 0.0, 0.0, json::object()};
    r.values.assign(10000, 1.0f);
    save_raster(dir / "short", r);
    // truncate to 9,999 floats
    fs::resize_file(raster_payload_path(dir / "short"), 9999 * sizeof(float));
    CHECK_THROWS_AS(load_grid(dir / "short"), std::runtime_error);
  }

  SECTION("malformed header and invalid heights fail") {
    write_file_atomic(dir / "bad.json", "{\"width_px\": 2}");
    write_file_atomic(dir / "bad.f32", std::string(16, '\0'));
    CHECK_THROWS(load_grid(dir / "bad"));

    Raster r;
    r.header = {2, 1, 1.0, 0.0, 0.0, json::object()};
    r.values = {1.0f, std::numeric_limits<float>::quiet_NaN()};
    save_raster(dir / "nan", r);
    CHECK_THROWS_AS(load_grid(dir / "nan"), std::runtime_error);
    r.values = {1.0f, -2.0f};
    save_raster(dir / "neg", r);
    CHECK_THROWS_AS(load_grid(dir / "neg"), std::runtime_error);
  }

  SECTION("extra header fields survive a round trip") {
    Raster r;
    r.header = {1, 1, 1.0, 0.0, 0.0, json{{"note", "kept"}}};
    r.values = {3.0f};
    save_raster(dir / "extra", r);
    CHECK(load_raster(dir / "extra").header.extra.at("note") == "kept");
  }
}

TEST_CASE("Normalization", "[raster]") {
  const auto g = random_grid(8, 8, 1);
  const auto n1 = min_max_normalize(g.heights());
  const auto n2 = min_max_normalize(n1);
  SECTION("min-max normalization is idempotent") {
    for (std::size_t k = 0; k < n1.size(); ++k) CHECK(n2[k] == Catch::Approx(n1[k]).margin(1e-6));
  }
  SECTION("inversion orders taller cells closer to zero") {
    const auto img = normalize_elevation(g);
    for (std::size_t a = 0; a < img.values.size(); ++a)
      for (std::size_t b = 0; b < img.values.size(); ++b)
        if (g.heights()[a] > g.heights()[b]) CHECK(img.values[a] < img.values[b]);
    CHECK(*std::min_element(img.values.begin(), img.values.end()) == 0.0f);
    CHECK(*std::max_element(img.values.begin(), img.values.end()) == 1.0f);
  }
  SECTION("uniform window gives all ones") {
    const ElevationGrid flat(64, 64, 10.0, {0, 0}, std::vector<float>(64 * 64, 7.0f));
    const auto img = crop_centered(flat, {{320.0, 320.0}, 10.0}, 640.0, 32);
    for (float v : img.values) CHECK(v == 1.0f);
  }
}

TEST_CASE("Centered cropping", "[raster]") {
  const ElevationGrid big(400, 400, 10.0, {0, 0}, std::vector<float>(400 * 400, 0.0f));
  const TxLocation tx{{2005.0, 1995.0}, 10.0};

  SECTION("effective resolution is extent / out_px") {
    CHECK(resample_window(big, tx, 500.0, 200).resolution_m() == Catch::Approx(2.5));
    CHECK(resample_window(big, tx, 3000.0, 200).resolution_m() == Catch::Approx(15.0));
  }

  SECTION("tx sits at the center pixel") {
    for (int out : {8, 9, 64, 65}) {
      const auto win = resample_window(big, tx, 640.0, out);
      const CellIndex c = win.cell_of(tx.position);
      CHECK(c.i == out / 2);
      CHECK(c.j == out / 2);
      CHECK(window_tx(win, tx).position.x == Catch::Approx(tx.position.x));
    }
  }

  SECTION("max pooling keeps the tallest source cell") {
    std::vector<float> h(400 * 400, 0.0f);
    h[200 * 400 + 203] = 55.0f;  // one tall cell near the tx
    const ElevationGrid g(400, 400, 10.0, {0, 0}, h);
    const auto win = resample_window(g, tx, 640.0, 16);  // 40 m pixels
    CHECK(win.max_height() == 55.0f);
  }

  SECTION("off-grid cells take the window minimum") {
    std::vector<float> h(20 * 20, 5.0f);
    h[0] = 3.0f;
    const ElevationGrid g(20, 20, 10.0, {0, 0}, h);
    const auto win = resample_window(g, {{15.0, 15.0}, 10.0}, 400.0, 16);
    CHECK(win.at(0, 0) == 3.0f);
    CHECK(win.min_height() == 3.0f);
  }

  SECTION("tx pixel keeps the ground height under the tx") {
    std::vector<float> h(400 * 400, 0.0f);
    for (int j = 195; j < 205; ++j)
      for (int i = 195; i < 205; ++i)
        if (!(i == 200 && j == 199)) h[j * 400 + i] = 30.0f;
    const ElevationGrid g(400, 400, 10.0, {0, 0}, h);
    const auto win = resample_window(g, tx, 1600.0, 16);
    CHECK(win.at(8, 8) == 0.0f);
    CHECK_FALSE(win.is_footprint(8, 8));
  }

  SECTION("bad arguments") {
    CHECK_THROWS_AS(resample_window(big, tx, 0.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(resample_window(big, tx, -5.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(resample_window(big, {{-1.0, 5.0}, 10.0}, 500.0, 64), std::invalid_argument);
  }
}

TEST_CASE("Geometric transforms", "[raster]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> x(64);
  for (auto& v : x) v = u(rng);

  auto T = [](const std::vector<float>& v, GeometricTransform t) { return apply_transform(v, 8, t); };
  using G = GeometricTransform;

  CHECK(T(T(x, G::rot180), G::rot180) == x);
  CHECK(T(T(T(T(x, G::rot90), G::rot90), G::rot90), G::rot90) == x);
  CHECK(T(T(x, G::rot90), G::rot270) == x);
  CHECK(T(T(x, G::flip_h), G::flip_h) == x);
  CHECK(T(T(x, G::flip_v), G::flip_v) == x);

  SECTION("pixel permutation preserves the multiset") {
    for (auto t : kAllTransforms) {
      auto a = T(x, t);
      auto b = x;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK(a == b);
    }
  }

  SECTION("rot90 moves the top-left pixel as a counterclockwise turn in (i, j)") {
    // (i, j) -> (n-1-j, i)
    std::vector<float> e(16, 0.0f);
    e[0 * 4 + 1] = 1.0f;  // (1, 0)
    const auto r = apply_transform(e, 4, G::rot90);
    CHECK(r[1 * 4 + 3] == 1.0f);  // (3, 1)
  }

  SECTION("closure: the six transforms generate the 8-element dihedral group") {
    std::vector<Dihedral> group{Dihedral{}};
    bool grown = true;
    while (grown) {
      grown = false;
      const auto current = group;
      for (const auto& a : current)
        for (auto t : kAllTransforms) {
          const Dihedral c = Dihedral::of(t).compose(a);
          if (std::find(group.begin(), group.end(), c) == group.end()) {
            group.push_back(c);
            grown = true;
          }
        }
    }
    CHECK(group.size() == 8);
    // composition table: applying a then b on pixels equals the composed element
    for (auto a : kAllTransforms)
      for (auto b : kAllTransforms)
        CHECK(T(T(x, a), b) == apply_transform(x, 8, Dihedral::of(b).compose(Dihedral::of(a))));
    for (const auto& g : group) CHECK(g.compose(g.inverse()) == Dihedral{});
  }

  SECTION("tx follows its pixel") {
    const ElevationGrid g(8, 8, 5.0, {100.0, 200.0}, std::vector<float>(64, 0.0f));
    const TxLocation tx{g.cell_center(2, 5), 10.0};
    for (auto t : kAllTransforms) {
      const CellIndex dst = transform_cell({2, 5}, 8, t);
      const auto moved = apply_transform(tx, g, t);
      CHECK(g.cell_of(moved.position) == dst);
      CHECK(moved.position.x == Catch::Approx(g.cell_center(dst.i, dst.j).x));
      CHECK(moved.position.y == Catch::Approx(g.cell_center(dst.i, dst.j).y));
    }
  }
}

TEST_CASE("Tx sampling", "[raster]") {
  SECTION("all-building grid has no valid cells") {
    std::vector<float> h(16, 30.0f);
    h[0] = 0.0f;  // the minimum cell is ground; make everything else a building
    const ElevationGrid g(4, 4, 10.0, {0, 0}, h);
    CHECK_THROWS_AS(sample_tx_locations(g, 2, 1), std::invalid_argument);
    try {
      sample_tx_locations(g, 2, 1);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("only 1") != std::string::npos);
    }
  }

  SECTION("deterministic, distinct, outside footprints") {
    const auto city = synth_city({.width_px = 60, .height_px = 60}, 5);
    const auto a = sample_tx_locations(city, 50, 77);
    const auto b = sample_tx_locations(city, 50, 77);
    CHECK(a == b);
    std::set<std::pair<int, int>> cells;
    for (const auto& t : a) {
      const auto c = city.cell_of(t.position);
      CHECK_FALSE(city.is_footprint(c.i, c.j));
      CHECK(t.height_m == kDefaultTxHeightM);
      cells.insert({c.i, c.j});
    }
    CHECK(cells.size() == 50);
  }

  SECTION("cell frequencies are uniform (chi-square)") {
    std::vector<float> h(36, 0.0f);
    for (int k : {3, 7, 8, 20, 31}) h[k] = 15.0f;
    const ElevationGrid g(6, 6, 1.0, {0, 0}, h);
    std::map<std::pair<int, int>, int> counts;
    const int draws = 100000;
    for (int s = 0; s < draws; ++s) {
      const auto t = sample_tx_locations(g, 1, 1000 + s)[0];
      const auto c = g.cell_of(t.position);
      ++counts[{c.i, c.j}];
    }
    REQUIRE(counts.size() == 31);
    const double expected = static_cast<double>(draws) / 31.0;
    double chi2 = 0.0;
    for (const auto& [cell, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
    const boost::math::chi_squared dist(30.0);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.01);
  }
}

TEST_CASE("Procedural city", "[raster]") {
  SECTION("density 0 gives an empty city") {
    CityParams p;
    p.width_px = p.height_px = 100;
    p.density = 0.0;
    const auto g = synth_city(p, 3);
    for (float h : g.heights()) CHECK(h == 0.0f);
  }

  SECTION("density 1 with a fixed height fills every block at that height") {
    CityParams p;
    p.width_px = p.height_px = 100;
    p.density = 1.0;
    p.height_lo_m = p.height_hi_m = 20.0;
    const auto layout = synth_city_layout(p, 3);
    std::size_t blocks = 0;
    for (std::size_t k = 0; k < layout.block_mask.size(); ++k) {
      const float h = layout.grid.heights()[k];
      if (layout.block_mask[k]) {
        ++blocks;
        CHECK(h == 20.0f);
      } else {
        CHECK(h == 0.0f);
      }
    }
    CHECK(blocks > 0);
  }

  SECTION("built fraction of block area tracks density over 50 seeds") {
    for (double density : {0.3, 0.55, 0.8}) {
      CityParams p;
      p.width_px = p.height_px = 200;
      p.density = density;
      double acc = 0.0;
      for (int s = 0; s < 50; ++s) {
        const auto layout = synth_city_layout(p, 100 + s);
        std::size_t blocks = 0, built = 0;
        for (std::size_t k = 0; k < layout.block_mask.size(); ++k) {
          blocks += layout.block_mask[k];
          built += layout.block_mask[k] && layout.grid.heights()[k] > 0.0f;
        }
        acc += static_cast<double>(built) / static_cast<double>(blocks);
      }
      CHECK(std::abs(acc / 50.0 - density) <= 0.05);
    }
  }

  SECTION("deterministic given a seed, invalid params rejected") {
    CityParams p;
    p.width_px = p.height_px = 80;
    CHECK(synth_city(p, 11) == synth_city(p, 11));
    CHECK_FALSE(synth_city(p, 11) == synth_city(p, 12));
    p.density = 1.5;
    CHECK_THROWS_AS(synth_city(p, 1), std::invalid_argument);
    p.density = 0.5;
    p.height_lo_m = 50.0;
    p.height_hi_m = 10.0;
    CHECK_THROWS_AS(synth_city(p, 1), std::invalid_argument);
  }
}
