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
#include <string>
#include <vector>

#include <json.hpp>

#include "radiomap/propagate.hpp"
#include "radiomap/raster.hpp"

namespace radiomap {

/// Targets are stored as v = (db - floor) / range with db in [-150, -50].
inline constexpr double kTargetRangeDb = kGainCeilDb - kGainFloorDb;
inline double normalize_gain_db(double db) { return (db - kGainFloorDb) / kTargetRangeDb; }
inline double denormalize_gain(double v) { return kGainFloorDb + kTargetRangeDb * v; }

struct DatasetConfig {
  CityParams city;
  int n_scenes = 4;          // procedural cities
  int n_tx_per_scene = 50;   // base scenarios per city
  double extent_min_m = 500.0;
  double extent_max_m = 3000.0;
  int out_px = kDefaultImagePx;
  double tx_height_m = kDefaultTxHeightM;
  PropagationConfig propagation;  // default: depth 10, diffraction on
  std::vector<GeometricTransform> transforms{kAllTransforms.begin(), kAllTransforms.end()};
  int folds = 5;

  void validate() const;
  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& doc);
};

enum class Split { train, val, test };
std::string to_string(Split s);

struct SampleRecord {
  std::string id;
  int base_index = 0;  // (scene, tx) pair; the unit that folds partition
  int scene_id = 0;
  TxLocation tx;       // in the source city frame
  double extent_m = 0.0;
  GeometricTransform transform = GeometricTransform::identity;
  std::string input_stem;   // relative to the manifest directory
  std::string target_stem;
  int fold = 0;
  Split split = Split::train;  // under fold rotation 0
};

struct SkippedBase {
  int base_index = 0;
  std::string reason;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t master_seed = 0;
  nlohmann::json config;
  std::string config_hash;
  int folds = 5;
  std::vector<SampleRecord> samples;
  std::vector<SkippedBase> skipped;

  std::vector<int> base_indices() const;  // sorted, unique
  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& doc);
};

/// Fold assignment over base scenarios. Bases are shuffled once and cut into
/// k contiguous groups; rotation r lists the groups starting at r and splits
/// that order 70/15/15 into train/val/test.
class FoldAssignment {
 public:
  FoldAssignment(std::vector<int> bases, int k, std::uint64_t seed);
  int k() const { return k_; }
  int fold_of(int base) const;
  Split split_of(int base, int rotation) const;
  std::vector<int> bases_in(Split s, int rotation) const;

 private:
  int k_;
  std::vector<int> order_;              // shuffled base ids
  std::vector<std::pair<int, int>> group_;  // base -> (group, position in order)
  int position_in_rotation(int base, int rotation) const;
};

FoldAssignment split_kfold(const DatasetManifest& manifest, int k, std::uint64_t seed);
/// The assignment generate_dataset recorded in the manifest.
FoldAssignment manifest_folds(const DatasetManifest& manifest);

/// Writes samples/{id}.{input,target}.{json,f32} and, last, manifest.json.
/// Cities are synthesized from cfg.city.
DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir,
                                 std::uint64_t master_seed, int jobs = 1);
/// Same, over caller-supplied scenes; cfg.n_scenes and cfg.city are ignored.
DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::vector<ElevationGrid>& scenes,
                                 const std::filesystem::path& out_dir, std::uint64_t master_seed, int jobs = 1);

/// One (scene, tx) base scenario before augmentation.
struct BaseScenario {
  int scene_id = 0;
  TxLocation tx;
  double extent_m = 0.0;
};
/// Base scenarios exactly as generate_dataset draws them.
std::vector<BaseScenario> draw_base_scenarios(const DatasetConfig& cfg, const std::vector<ElevationGrid>& cities,
                                              std::uint64_t master_seed);
std::vector<ElevationGrid> make_cities(const DatasetConfig& cfg, std::uint64_t master_seed);
/// FNV-1a digest of a grid's geometry and heights.
std::string grid_digest(const ElevationGrid& grid);

struct DatasetSample {
  SampleRecord record;
  NormalizedImage input;
  std::vector<float> target;          // normalized gains
  std::vector<std::uint8_t> mask;     // 1 where the loss counts (non-footprint)
};

DatasetManifest load_manifest(const std::filesystem::path& manifest_path);
DatasetSample load_sample(const std::filesystem::path& dataset_dir, const SampleRecord& record);
std::vector<DatasetSample> load_samples(const std::filesystem::path& dataset_dir, const DatasetManifest& manifest,
                                        const std::vector<int>& bases);

}  // namespace radiomap
