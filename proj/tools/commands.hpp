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

#include <filesystem>
#include <ostream>
#include <vector>

#include "run_config.hpp"

namespace radiomap::cli {

/// Output layout below RunConfig::output_dir. Everything except timing/ and
/// its rendered figures is a pure function of the config and seed.
struct OutputLayout {
  std::filesystem::path root;
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path manifest() const { return dataset() / "manifest.json"; }
  std::filesystem::path models() const { return root / "model"; }
  std::filesystem::path model(int rotation) const { return models() / ("rot" + std::to_string(rotation)); }
  std::filesystem::path samples() const { return root / "samples"; }
  std::filesystem::path measurements() const { return root / "measurements"; }
  std::filesystem::path figures() const { return root / "figures"; }
  std::filesystem::path timing() const { return root / "timing"; }
};

/// Progress messages go to `log` when non-null.
struct Context {
  RunConfig config;
  std::ostream* log = nullptr;
  OutputLayout layout() const { return {config.output_dir}; }
};

/// The config with the worker count pushed into every module section.
RunConfig with_jobs(RunConfig cfg, int jobs);

/// Elevation grids the dataset is drawn from: the configured scene files or
/// procedural cities from `seed`.
std::vector<ElevationGrid> source_scenes(const RunConfig& cfg, std::uint64_t seed);

/// Windows around the first sweep.n_scenes base scenarios drawn from the
/// source scenes under the sweep seed stream.
std::vector<SweepScene> sweep_scenes(const RunConfig& cfg);

/// Fidelity sweep over sweep_scenes(). Writes
/// sweep.csv, sweep_summary.json and timing/sweep_timing.csv.
std::filesystem::path cmd_sweep_rt(const Context& ctx);
/// Returns the manifest path.
std::filesystem::path cmd_gen_dataset(const Context& ctx);
/// Trains one model per configured fold rotation; returns the weight stems.
std::vector<std::filesystem::path> cmd_train(const Context& ctx);
/// Per-fold train/test metrics, test ECDFs, and sample rasters for the
/// report; returns metrics.json.
std::filesystem::path cmd_eval(const Context& ctx);
/// Calibration trials on held-out scenes; returns calibration_summary.json.
std::filesystem::path cmd_calibrate(const Context& ctx);
/// System-level comparison of the calibration predictors against the
/// measured gains; returns syslevel_summary.json.
std::filesystem::path cmd_syslevel(const Context& ctx);
/// Renders one PNG per CSV and one triptych per sample into figures/.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& output_dir, std::ostream* log = nullptr);

}  // namespace radiomap::cli
