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

#include <Eigen/Core>
#include <json.hpp>

#include "radiomap/dataset.hpp"
#include "radiomap/propagate.hpp"
#include "radiomap/raster.hpp"
#include "radiomap/stats.hpp"

namespace radiomap {

// ---------------------------------------------------------------------------
// Architecture

enum class BlockType { conv_pool, residual, aspp };
std::string to_string(BlockType b);

struct EncoderStage {
  BlockType type = BlockType::residual;
  int channels = 16;
  int blocks = 1;           // residual blocks in the stage
  bool downsample = false;  // 2x2 max-pool (after the conv for conv_pool, before the blocks otherwise)
  int dilation = 1;         // 3x3 dilation inside residual blocks
};

struct DecoderStage {
  bool upsample = true;  // 2x2 stride-2 transposed conv, then concat with the encoder skip at that size
  int channels = 16;
};

struct NetworkSpec {
  int input_px = 64;
  int base_channels = 4;
  /// Appends log-distance and distance-to-center planes to the elevation input.
  bool coord_channels = true;
  std::vector<EncoderStage> encoder;
  std::vector<DecoderStage> decoder;
  std::vector<int> aspp_dilations{1, 2, 4};

  int input_channels() const { return coord_channels ? 3 : 1; }
  void validate() const;
  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& doc);

  /// Reduced-width network with the stage pattern of the full model.
  static NetworkSpec desk(int input_px = 64, int base_channels = 4);
  /// Full-width layout at 200 px.
  static NetworkSpec paper_scale();
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

namespace detail {

struct ConvOp {
  int cin = 0, cout = 0, k = 1, dil = 1;
  bool relu = false;
  std::size_t w = 0, b = 0;  // parameter offsets
};

enum class OpKind { coord, conv, upconv, maxpool, add_relu, concat, sigmoid };

struct Op {
  OpKind kind = OpKind::conv;
  int in0 = -1, in1 = -1, out = -1;
  ConvOp conv;  // conv / upconv
};

struct Shape {
  int c = 0, h = 0, w = 0;
  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
};

}  // namespace detail

/// Buffers share one alignment so vectorized kernels take the same code path
/// on every thread.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// Activations and gradients for one forward/backward pass.
template <class T>
struct Workspace {
  std::vector<AlignedVector<T>> value;
  std::vector<AlignedVector<T>> grad;
  std::vector<std::vector<std::uint32_t>> argmax;
  AlignedVector<T> cols, dcols;
  std::span<const T> output() const { return value.back(); }
};

/// Convolutional encoder-decoder with residual stages, ASPP and skip
/// connections. All parameters live in one flat vector.
template <class T>
class Network {
 public:
  Network() = default;
  /// Fan-in scaled uniform initialization, deterministic in `seed`.
  Network(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

  /// image: input_px^2 values, row-major. Output in ws.output(), in [0, 1].
  void forward(std::span<const float> image, Workspace<T>& ws) const;
  /// Accumulates dLoss/dparams into grad given dLoss/doutput; ws must hold
  /// the matching forward pass.
  void backward(Workspace<T>& ws, std::span<const T> dout, std::span<T> grad) const;

  template <class U>
  Network<U> cast() const;

 private:
  template <class U>
  friend class Network;

  NetworkSpec spec_;
  std::uint64_t seed_ = 0;
  AlignedVector<T> params_;
  std::vector<TensorInfo> tensors_;
  std::vector<detail::Op> ops_;
  std::vector<detail::Shape> shapes_;
  AlignedVector<T> coord_;  // constant input planes

  void build(std::vector<double>* bounds);
};

using Weights = Network<float>;

Weights build_network(const NetworkSpec& spec, std::uint64_t seed);

/// Single-image inference into a caller-owned buffer.
std::vector<float> forward(const Weights& w, const NormalizedImage& image);

void save_weights(const std::filesystem::path& stem, const Weights& w, const nlohmann::json& meta = nlohmann::json::object());
Weights load_weights(const std::filesystem::path& stem, nlohmann::json* meta = nullptr);

// ---------------------------------------------------------------------------
// Training

enum class OptimizerKind { sgd_momentum, adam };
std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::sgd_momentum;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 0.02;
  double momentum = 0.9;
  bool cosine_schedule = true;
  int patience = 10;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

/// One training pair. weight is the per-cell loss weight (0 masks a cell).
struct Example {
  std::vector<float> input;
  std::vector<float> target;
  std::vector<float> weight;
};

Example to_example(const DatasetSample& s);

/// Optimizer state. SGD: v = mu v + g, p -= lr v. Adam: bias-corrected
/// moments with beta1 = momentum, beta2 = 0.999, eps = 1e-8.
struct Optimizer {
  AlignedVector<float> velocity;
  AlignedVector<float> second;
  std::int64_t steps = 0;
};

void apply_update(OptimizerKind kind, Optimizer& opt, std::span<float> params, std::span<const float> grad,
                  double learning_rate, double momentum);

/// One optimizer update on the weighted MSE sum w (p - t)^2 / sum w over the
/// batch; returns the batch loss before the update.
double train_step(Weights& w, Optimizer& opt, std::span<const Example* const> batch, double learning_rate,
                  const TrainConfig& cfg);

/// Loss of the current weights over a set, batch order irrelevant.
double evaluate_loss(const Weights& w, std::span<const Example> examples, int jobs = 1);

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Weights weights;  // best validation loss
  std::vector<HistoryRow> history;
  int best_epoch = 0;
  double initial_train_loss = 0.0;
  double seconds = 0.0;
};

/// Trains from `init` (fresh weights or a pretrained model).
TrainResult train(const Weights& init, std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& cfg);
/// Trains a new network on one fold rotation of a generated dataset.
TrainResult train(const std::filesystem::path& dataset_dir, const DatasetManifest& manifest, int rotation,
                  const NetworkSpec& spec, const TrainConfig& cfg);

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> history);

// ---------------------------------------------------------------------------
// Inference and metrics

struct Prediction {
  RadioMap map;
  double seconds = 0.0;
};

/// db = -150 + 100 v on the forward output. Tx assumed at the center pixel.
Prediction predict_radio_map(const Weights& w, const NormalizedImage& elevation);

struct Metrics {
  double rmse_db = 0.0;
  Ecdf error_percent;  // |error dB| over the 100 dB range, in percent
  double median_error_percent = 0.0;
  std::size_t cells = 0;
};

/// Per-cell errors over cells with nonzero weight; values are normalized.
Metrics metrics_from_pairs(std::span<const std::vector<float>> predictions, std::span<const Example> examples);
Metrics evaluate(const Weights& w, std::span<const Example> examples, int jobs = 1);
Metrics evaluate(const Weights& w, const std::filesystem::path& dataset_dir, const DatasetManifest& manifest,
                 int rotation, Split split, int jobs = 1);

}  // namespace radiomap
