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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <catch_amalgamated.hpp>

#include "commands.hpp"
#include "plot.hpp"
#include "radiomap/io.hpp"

using namespace radiomap;
using namespace radiomap::cli;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_config(const fs::path& out) {
  return {{"master_seed", 3},
          {"output_dir", out.string()},
          {"city_params", {{"width_px", 120}, {"height_px", 120}}},
          {"dataset", {{"n_scenes", 1}, {"n_tx_per_scene", 12}, {"out_px", 32}, {"extent_min_m", 300}, {"extent_max_m", 900}, {"folds", 3}}},
          {"propagation", {{"rays_per_octant", 32}}},
          {"sweep", {{"n_scenes", 2}, {"depths", {1, 4, 20}}, {"image_px", 20}}},
          {"train", {{"epochs", 2}, {"batch_size", 4}}},
          {"rotations", {0, 1}},
          {"calibration", {{"trials", 2}, {"n_scenes", 2}, {"epochs", 10}, {"route_points", 40}, {"n_clusters", 4}}},
          {"syslevel", {{"n_slots", 100}}}};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("radiomap_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void run_all(const Context& ctx) {
  cmd_sweep_rt(ctx);
  cmd_gen_dataset(ctx);
  cmd_train(ctx);
  cmd_eval(ctx);
  cmd_calibrate(ctx);
  cmd_syslevel(ctx);
  cmd_report(ctx.config.output_dir);
}

/// Relative path -> bytes for every file except timings and their figures.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root);
    if (*rel.begin() == "timing" || rel.generic_string().starts_with("figures/timing/")) continue;
    files[rel.generic_string()] = read_file(e.path());
  }
  return files;
}

struct Exec {
  int code;
  std::string err;
};

Exec run_tool(const std::string& args) {
  const auto err_path = fs::temp_directory_path() / "radiomap_cli_stderr.txt";
  const std::string cmd = std::string(RADIOMAP_TOOL) + " " + args + " >/dev/null 2>" + err_path.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(err_path)};
}

}  // namespace

TEST_CASE("Run config parsing", "[cli]") {
  const auto base = tiny_config("/tmp/x");
  const auto cfg = parse_run_config(base);
  CHECK(cfg.dataset.out_px == 32);
  CHECK(cfg.network.input_px == 32);
  CHECK(cfg.dataset.city.width_px == 120);
  CHECK(cfg.dataset.propagation.rays_per_octant == 32);

  SECTION("default config validates") { CHECK_NOTHROW(parse_run_config(nlohmann::json::object())); }

  SECTION("rejections") {
    auto bad = base;
    bad["unknown"] = 1;
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
    bad = base;
    bad["scene"] = "grid";
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
    bad = base;
    bad["train"]["seed"] = 4;
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
    bad = base;
    bad["dataset"]["propagation"] = nlohmann::json::object();
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
    bad = base;
    bad["rotations"] = {3};
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
    bad = base;
    bad["network"] = {{"input_px", 64}};
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
    bad = base;
    bad["calibration"]["perturbation"] = {{"noise_sigma_db", -1.0}};
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
  }

  SECTION("hash ignores output directory and worker count") {
    auto other = base;
    other["output_dir"] = "/elsewhere";
    CHECK(parse_run_config(other).hash() == cfg.hash());
    CHECK(with_jobs(cfg, 4).hash() == cfg.hash());
    other = base;
    other["master_seed"] = 4;
    CHECK(parse_run_config(other).hash() != cfg.hash());
    other = base;
    other["syslevel"]["n_slots"] = 101;
    CHECK(parse_run_config(other).hash() != cfg.hash());
  }

  SECTION("stream seeds are distinct") {
    std::set<std::uint64_t> seeds;
    for (auto s : {Stream::sweep, Stream::train, Stream::calibration_scene, Stream::calibration, Stream::syslevel})
      seeds.insert(stream_seed(cfg, s));
    CHECK(seeds.size() == 5);
  }
}

TEST_CASE("Pipeline commands", "[cli]") {
  const auto dir = fresh_dir("pipeline");
  const Context ctx{with_jobs(parse_run_config(tiny_config(dir / "a")), 1), nullptr};
  const auto out = ctx.layout();

  SECTION("commands need their inputs") {
    CHECK_THROWS_AS(cmd_train(ctx), std::runtime_error);
    CHECK_THROWS_AS(cmd_syslevel(ctx), std::runtime_error);
    CHECK_THROWS_AS(cmd_report(dir / "missing"), std::invalid_argument);
  }

  SECTION("outputs, reruns and worker counts") {
    run_all(ctx);

    // sweep: 2 x |depths| rows, baseline self-comparison is exact
    const auto sweep = read_csv(out.root / "sweep.csv");
    CHECK(sweep.rows.size() == 6);
    for (const auto& row : sweep.rows)
      if (row[0] == "20" && row[1] == "1") CHECK(std::stod(row[3]) == 0.0);
    CHECK(read_json(out.root / "sweep_summary.json").contains("sweet_spot"));

    // dataset: sample count = usable bases x transforms
    const auto m = load_manifest(out.manifest());
    CHECK(m.samples.size() == (12 - m.skipped.size()) * 6);
    const auto first_hash = m.config_hash;
    const auto first_manifest = read_file(out.manifest());

    // eval: one entry per configured rotation
    const auto metrics = read_json(out.root / "metrics.json");
    CHECK(metrics.contains("median_error_percent"));
    CHECK(metrics.at("folds").size() == 2);
    CHECK(metrics.at("config_hash") == ctx.config.hash());

    // calibration: three ECDF series
    std::set<std::string> methods;
    for (const auto& row : read_csv(out.root / "calibration_ecdf.csv").rows) methods.insert(row[0]);
    CHECK(methods == std::set<std::string>{"misconfigured_oracle", "uncalibrated", "calibrated"});

    // syslevel: control run is exactly zero, three metric ECDFs per predictor
    const auto sys = read_json(out.root / "syslevel_summary.json");
    CHECK(sys.at("control_all_zero").get<bool>());
    CHECK(sys.at("control").at("median_error").at("bler").get<double>() == 0.0);
    std::set<std::string> metrics_seen;
    for (const auto& row : read_csv(out.root / "syslevel_calibrated.csv").rows) metrics_seen.insert(row[0]);
    CHECK(metrics_seen.count("capacity_bps"));
    CHECK(metrics_seen.count("spectral_efficiency"));
    CHECK(metrics_seen.count("bler"));

    // report: one image per CSV plus one triptych per sample
    std::size_t csvs = 0;
    for (const auto& e : fs::recursive_directory_iterator(out.root)) {
      const auto rel = fs::relative(e.path(), out.root);
      if (*rel.begin() == "figures" || *rel.begin() == "dataset" || e.path().extension() != ".csv") continue;
      ++csvs;
      auto png = (out.figures() / rel).replace_extension(".png");
      CHECK(fs::exists(png));
    }
    CHECK(csvs >= 10);
    CHECK(metrics.at("samples").size() > 0);
    for (const auto& id : metrics.at("samples"))
      CHECK(fs::exists(out.figures() / "samples" / (id.get<std::string>() + "_triptych.png")));

    // idempotent rerun
    const auto before = snapshot(out.root);
    run_all(ctx);
    CHECK((snapshot(out.root) == before));
    CHECK(load_manifest(out.manifest()).config_hash == first_hash);
    CHECK(read_file(out.manifest()) == first_manifest);

    // any worker count, any output directory
    auto cfg3 = ctx.config;
    cfg3.output_dir = dir / "b";
    const Context ctx3{with_jobs(cfg3, 3), nullptr};
    run_all(ctx3);
    const auto other = snapshot(cfg3.output_dir);
    REQUIRE(other.size() == before.size());
    for (const auto& [name, bytes] : before) {
      INFO(name);
      CHECK((other.count(name) && other.at(name) == bytes));
    }
  }
}

TEST_CASE("Heatmap panels share one color scale", "[cli]") {
  const auto dir = fresh_dir("heatmap");
  std::vector<float> v(16);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = -150.0f + 6.0f * static_cast<float>(k);
  const Heatmap panels[] = {{"a", 4, 4, v, false}, {"b", 4, 4, v, false}};
  CHECK_NOTHROW(render_heatmaps(dir / "h.png", panels, -150.0, -50.0, "dB"));
  CHECK(fs::file_size(dir / "h.png") > 100);
  CHECK(colormap(0.0) != colormap(1.0));
  CHECK(colormap(0.5) == colormap(0.5));
  const Heatmap wrong[] = {{"a", 4, 4, std::vector<float>(3), false}};
  CHECK_THROWS_AS(render_heatmaps(dir / "w.png", wrong, -150.0, -50.0, "dB"), std::invalid_argument);
}

TEST_CASE("Exit codes and error JSON", "[cli]") {
  const auto dir = fresh_dir("exit");
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"master_seed": 1, "bogus": true})";
    std::ofstream ok(dir / "ok.json");
    ok << tiny_config(dir / "out").dump();
  }
  auto r = run_tool("gen-dataset --config " + (dir / "bad.json").string());
  CHECK(r.code == 1);
  const auto err = nlohmann::json::parse(r.err);
  CHECK(err.at("error") == "validation");
  CHECK(err.at("message").get<std::string>().find("bogus") != std::string::npos);

  CHECK(run_tool("gen-dataset --config " + (dir / "nope.json").string()).code == 1);
  CHECK(run_tool("gen-dataset --jobs 0").code == 1);
  CHECK(run_tool("no-such-command").code == 1);

  r = run_tool("train --config " + (dir / "ok.json").string());
  CHECK(r.code == 2);
  CHECK(nlohmann::json::parse(r.err).at("error") == "runtime");

  CHECK(run_tool("gen-dataset --config " + (dir / "ok.json").string() + " --seed 9").code == 0);
  CHECK(load_manifest(dir / "out" / "dataset" / "manifest.json").master_seed == 9);
}
