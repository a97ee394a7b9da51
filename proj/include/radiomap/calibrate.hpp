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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiomap/learn.hpp"
#include "radiomap/propagate.hpp"
#include "radiomap/random.hpp"
#include "radiomap/raster.hpp"
#include "radiomap/stats.hpp"

namespace radiomap {

// ---------------------------------------------------------------------------
// Measurements

enum class Provenance { synthetic_reality, imported };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct MeasurementPoint {
  Point2 position;  // meters, scene frame
  double path_gain_db = 0.0;
};

struct MeasurementSet {
  int scene_id = 0;
  Provenance provenance = Provenance::synthetic_reality;
  std::uint64_t seed = 0;
  std::vector<MeasurementPoint> points;

  /// Gains in [-150, -50], positions inside the grid.
  void validate(const ElevationGrid& grid) const;
};

/// {stem}.csv (x_m, y_m, path_gain_db) and {stem}.json (scene_id, provenance, seed).
void save_measurements(const std::filesystem::path& stem, const MeasurementSet& m);
MeasurementSet load_measurements(const std::filesystem::path& stem);

/// Sim-to-real gap applied on top of the oracle.
struct Perturbation {
  double reflection_offset = -0.15;
  double bias_db = 4.0;
  double noise_sigma_db = 3.0;
  double correlation_cells = 5.0;  // std of the Gaussian smoothing kernel

  void validate() const;
  nlohmann::json to_json() const;
  static Perturbation from_json(const nlohmann::json& doc);
};

struct SyntheticReality {
  RadioMap truth;  // perturbed oracle + bias + noise, clamped
  MeasurementSet measurements;
};

/// Zero-mean Gaussian field with unit-variance cells, smoothed by a Gaussian
/// kernel of std `correlation_cells` (white noise for 0).
std::vector<double> correlated_noise(int width, int height, double correlation_cells, Rng& rng);

/// Samples `truth` along a random walk over open cells, one point per step
/// of one cell length.
std::vector<Point2> random_walk_route(const ElevationGrid& grid, const TxLocation& tx, int n_points, Rng& rng);

SyntheticReality synth_reality(const ElevationGrid& grid, const TxLocation& tx, const PropagationConfig& cfg,
                               const Perturbation& perturbation, int n_points, std::uint64_t seed, int scene_id = 0);

// ---------------------------------------------------------------------------
// Geographic split

struct KMeansResult {
  std::vector<int> labels;
  std::vector<Point2> centers;
  int iterations = 0;
};

/// Lloyd iterations from the given centers until the labels stop changing.
/// Ties go to the lower cluster index; an empty cluster keeps its center.
KMeansResult lloyd(std::span<const Point2> points, std::vector<Point2> centers, int max_iterations = 100);
/// k-means++ seeding followed by lloyd().
KMeansResult kmeans(std::span<const Point2> points, int k, std::uint64_t seed);

struct CalibrationConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double train_fraction = 0.20;
  double lambda_meas = 0.8;
  int n_clusters = 10;
  int epochs = 300;
  double learning_rate = 0.003;
  double momentum = 0.9;
  int trials = 20;
  int route_points = 400;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static CalibrationConfig from_json(const nlohmann::json& doc);
};

struct GeoSplit {
  std::vector<int> train;  // point indices, ascending
  std::vector<int> test;
  std::vector<int> cluster_of;
  std::vector<int> train_clusters;
};

/// k-means on positions; clusters are visited in a random order and the
/// prefix whose point share is closest to cfg.train_fraction goes to train
/// (at least one cluster on each side).
GeoSplit geographic_split(const MeasurementSet& m, const CalibrationConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Fine-tuning

/// A measurement snapped to its raster cell, gain normalized like targets.
struct MeasuredCell {
  std::size_t index = 0;  // row-major cell
  float value = 0.0f;
};

std::vector<MeasuredCell> measured_cells(const ElevationGrid& grid, std::span<const MeasurementPoint> points);

/// L = lambda * mean over points (p - m)^2 + (1 - lambda) * sum mask (p - s)^2 / sum mask.
/// Writes dL/dp into grad when non-empty.
double calibration_loss(std::span<const float> pred, std::span<const float> sim_target,
                        std::span<const std::uint8_t> mask, std::span<const MeasuredCell> meas, double lambda,
                        std::span<float> grad = {});
double calibration_loss(std::span<const double> pred, std::span<const float> sim_target,
                        std::span<const std::uint8_t> mask, std::span<const MeasuredCell> meas, double lambda,
                        std::span<double> grad = {});

struct FinetuneResult {
  Weights weights;
  std::vector<double> loss;  // before each epoch's update
};

/// One full-map update per epoch at a constant learning rate.
FinetuneResult finetune(const Weights& w, const NormalizedImage& elevation, std::span<const float> sim_target,
                        std::span<const MeasuredCell> meas_train, const CalibrationConfig& cfg);

// ---------------------------------------------------------------------------
// Trials

struct CalibrationScene {
  int scene_id = 0;
  ElevationGrid window;
  TxLocation tx;
  NormalizedImage elevation;
  RadioMap simulated;  // oracle with the assumed material
  SyntheticReality reality;
};

CalibrationScene make_calibration_scene(const ElevationGrid& window, const TxLocation& tx,
                                        const PropagationConfig& cfg, const Perturbation& perturbation,
                                        int route_points, std::uint64_t seed, int scene_id);

struct PointComparison {
  int trial = 0;
  int scene_id = 0;
  Point2 position;
  double measured_db = 0.0;
  double oracle_db = 0.0;
  double uncalibrated_db = 0.0;
  double calibrated_db = 0.0;
};

struct CalibrationReport {
  int trials = 0;
  std::vector<std::string> failures;
  Ecdf oracle, uncalibrated, calibrated;  // error percent on held-out points
  std::vector<PointComparison> points;

  nlohmann::json summary() const;
  /// method, error_percent, cumulative_prob
  std::string ecdf_csv() const;
  std::string points_csv() const;
};

/// Each trial splits every scene afresh, fine-tunes a private copy of `model`
/// on the train points and scores all three predictors on the test points.
CalibrationReport calibration_trials(const std::vector<CalibrationScene>& scenes, const Weights& model,
                                     const CalibrationConfig& cfg);

}  // namespace radiomap
