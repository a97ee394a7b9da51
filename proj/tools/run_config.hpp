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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiomap/calibrate.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/learn.hpp"
#include "radiomap/syslevel.hpp"

namespace radiomap::cli {

/// Scenes for the fidelity sweep are windows around the first n base
/// scenarios drawn from the dataset cities.
struct SweepConfig {
  int n_scenes = 30;
  std::vector<int> depths{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  int image_px = 64;
  double sweet_spot_fraction = 1e-3;
};

struct CalibrationSection {
  CalibrationConfig config;
  Perturbation perturbation;
  int n_scenes = 5;
};

struct RunConfig {
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "out";
  /// Elevation grid stems replacing the procedural cities.
  std::vector<std::filesystem::path> scenes;
  DatasetConfig dataset;
  SweepConfig sweep;
  NetworkSpec network = NetworkSpec::desk();
  TrainConfig train;
  std::vector<int> rotations{0};
  CalibrationSection calibration;
  SystemConfig syslevel;
  int jobs = 1;

  /// Canonical form: every section with defaults filled in. Excludes the
  /// output directory and worker count, which never change results.
  nlohmann::json to_json() const;
  std::string hash() const;
  void validate() const;
};

/// Sections: scene | city_params, propagation, dataset, sweep, network,
/// train, rotations, calibration, syslevel, output_dir, master_seed.
/// Module seeds are derived from master_seed and may not be set directly.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Seed streams below master_seed.
enum class Stream : std::uint64_t { sweep = 1, train = 2, calibration_scene = 3, calibration = 4, syslevel = 5 };
std::uint64_t stream_seed(const RunConfig& cfg, Stream s, std::initializer_list<std::uint64_t> path = {});

}  // namespace radiomap::cli
