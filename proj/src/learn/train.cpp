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
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "radiomap/io.hpp"
#include "radiomap/learn.hpp"
#include "radiomap/parallel.hpp"
#include "radiomap/random.hpp"

namespace radiomap {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd_momentum"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd_momentum") return OptimizerKind::sgd_momentum;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

void apply_update(OptimizerKind kind, Optimizer& opt, std::span<float> params, std::span<const float> grad,
                  double learning_rate, double momentum) {
  const std::size_t np = params.size();
  if (grad.size() != np) throw std::invalid_argument("gradient size mismatch");
  if (opt.velocity.size() != np) opt.velocity.assign(np, 0.0f);
  const auto mu = static_cast<float>(momentum);
  const auto lr = static_cast<float>(learning_rate);
  ++opt.steps;
  if (kind == OptimizerKind::sgd_momentum) {
    for (std::size_t k = 0; k < np; ++k) {
      opt.velocity[k] = mu * opt.velocity[k] + grad[k];
      params[k] -= lr * opt.velocity[k];
    }
    return;
  }
  if (opt.second.size() != np) opt.second.assign(np, 0.0f);
  constexpr float b2 = 0.999f, eps = 1e-8f;
  const auto t = static_cast<double>(opt.steps);
  const auto c1 = static_cast<float>(1.0 / (1.0 - std::pow(momentum, t)));
  const auto c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(b2), t)));
  for (std::size_t k = 0; k < np; ++k) {
    opt.velocity[k] = mu * opt.velocity[k] + (1.0f - mu) * grad[k];
    opt.second[k] = b2 * opt.second[k] + (1.0f - b2) * grad[k] * grad[k];
    params[k] -= lr * (opt.velocity[k] * c1) / (std::sqrt(opt.second[k] * c2) + eps);
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
  if (optimizer == OptimizerKind::adam && !(momentum > 0.0)) throw std::invalid_argument("adam needs momentum > 0");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"optimizer", to_string(optimizer)}, {"epochs", epochs},     {"batch_size", batch_size},         {"learning_rate", learning_rate},
          {"momentum", momentum}, {"cosine_schedule", cosine_schedule}, {"patience", patience},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "optimizer") c.optimizer = optimizer_from_string(it->get<std::string>());
    else if (k == "epochs") c.epochs = it->get<int>();
    else if (k == "batch_size") c.batch_size = it->get<int>();
    else if (k == "learning_rate") c.learning_rate = it->get<double>();
    else if (k == "momentum") c.momentum = it->get<double>();
    else if (k == "cosine_schedule") c.cosine_schedule = it->get<bool>();
    else if (k == "patience") c.patience = it->get<int>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "jobs") c.jobs = it->get<int>();
    else throw std::invalid_argument("unknown train key: " + k);
  }
  c.validate();
  return c;
}

Example to_example(const DatasetSample& s) {
  Example e;
  e.input = s.input.values;
  e.target = s.target;
  e.weight.assign(s.mask.begin(), s.mask.end());
  return e;
}

namespace {

void check_example(const Weights& w, const Example& e) {
  const auto n = static_cast<std::size_t>(w.spec().input_px);
  if (e.input.size() != n * n || e.target.size() != n * n || e.weight.size() != n * n)
    throw std::invalid_argument("example shape does not match the network input (" + std::to_string(n) + " px)");
}

double weight_sum(const Example& e) {
  double s = 0.0;
  for (float v : e.weight) s += v;
  return s;
}

// Sum of w (p - t)^2 for one example.
double weighted_sse(std::span<const float> pred, const Example& e) {
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = static_cast<double>(pred[k]) - e.target[k];
    s += e.weight[k] * d * d;
  }
  return s;
}

}  // namespace

double train_step(Weights& w, Optimizer& opt, std::span<const Example* const> batch, double learning_rate,
                  const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t np = w.parameter_count();
  double total_w = 0.0;
  for (const Example* e : batch) {
    check_example(w, *e);
    total_w += weight_sum(*e);
  }
  if (!(total_w > 0.0)) throw std::invalid_argument("batch has no weighted cells");

  // Per-sample gradients, summed in batch order so the result is independent
  // of the number of worker threads.
  std::vector<AlignedVector<float>> grads(batch.size());
  std::vector<double> sse(batch.size());
  const Weights& cw = w;
  parallel_for(batch.size(), cfg.jobs, [&](std::size_t b) {
    thread_local Workspace<float> ws;
    thread_local std::vector<float> dout;
    const Example& e = *batch[b];
    cw.forward(e.input, ws);
    const auto pred = ws.output();
    sse[b] = weighted_sse(pred, e);
    dout.resize(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k)
      dout[k] = static_cast<float>(2.0 * e.weight[k] * (static_cast<double>(pred[k]) - e.target[k]) / total_w);
    grads[b].assign(np, 0.0f);
    cw.backward(ws, dout, grads[b]);
  });

  double loss = 0.0;
  for (double s : sse) loss += s;
  loss /= total_w;
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss (" << loss << ") over a batch of " << batch.size() << " examples at learning rate "
        << learning_rate;
    throw std::runtime_error(msg.str());
  }

  AlignedVector<float>& g = grads[0];
  for (std::size_t b = 1; b < grads.size(); ++b)
    for (std::size_t k = 0; k < np; ++k) g[k] += grads[b][k];
  apply_update(cfg.optimizer, opt, w.params(), g, learning_rate, cfg.momentum);
  return loss;
}

double evaluate_loss(const Weights& w, std::span<const Example> examples, int jobs) {
  if (examples.empty()) throw std::invalid_argument("no examples to evaluate");
  std::vector<double> sse(examples.size());
  parallel_for(examples.size(), jobs, [&](std::size_t i) {
    thread_local Workspace<float> ws;
    check_example(w, examples[i]);
    w.forward(examples[i].input, ws);
    sse[i] = weighted_sse(ws.output(), examples[i]);
  });
  double s = 0.0, total_w = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    s += sse[i];
    total_w += weight_sum(examples[i]);
  }
  return total_w > 0.0 ? s / total_w : 0.0;
}

TrainResult train(const Weights& init, std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("empty training split");
  if (val_set.empty()) throw std::invalid_argument("empty validation split");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult r;
  Weights w = init;
  Optimizer opt;
  r.weights = w;
  r.initial_train_loss = evaluate_loss(w, train_set, cfg.jobs);
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::vector<const Example*> batch;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.cosine_schedule
                          ? cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / cfg.epochs))
                          : cfg.learning_rate;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(cfg.seed, {1, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t k = start; k < end; ++k) batch.push_back(&train_set[order[k]]);
      loss_sum += train_step(w, opt, batch, lr, cfg) * static_cast<double>(batch.size());
    }
    const double val = evaluate_loss(w, val_set, cfg.jobs);
    r.history.push_back({epoch + 1, loss_sum / static_cast<double>(order.size()), val, lr});
    if (val < best_val) {
      best_val = val;
      r.weights = w;
      r.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

std::vector<Example> load_examples(const std::filesystem::path& dir, const DatasetManifest& m,
                                   const std::vector<int>& bases) {
  std::vector<Example> out;
  for (const auto& s : load_samples(dir, m, bases)) out.push_back(to_example(s));
  return out;
}

}  // namespace

TrainResult train(const std::filesystem::path& dataset_dir, const DatasetManifest& manifest, int rotation,
                  const NetworkSpec& spec, const TrainConfig& cfg) {
  const auto folds = manifest_folds(manifest);
  const auto tr = load_examples(dataset_dir, manifest, folds.bases_in(Split::train, rotation));
  const auto va = load_examples(dataset_dir, manifest, folds.bases_in(Split::val, rotation));
  return train(build_network(spec, cfg.seed), tr, va, cfg);
}

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> history) {
  CsvWriter csv({"epoch", "train_loss", "val_loss", "lr"});
  for (const auto& h : history)
    csv.add_row({std::to_string(h.epoch), format_double(h.train_loss), format_double(h.val_loss), format_double(h.lr)});
  csv.save(path);
}

// ---------------------------------------------------------------------------

Prediction predict_radio_map(const Weights& w, const NormalizedImage& elevation) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto v = forward(w, elevation);
  Prediction p;
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const int n = elevation.size_px;
  p.map.width_px = p.map.height_px = n;
  p.map.resolution_m = elevation.resolution_m;
  p.map.gains_db.resize(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) p.map.gains_db[k] = static_cast<float>(denormalize_gain(v[k]));
  const int c = center_index(n);
  p.map.tx.position = {(c + 0.5) * elevation.resolution_m, (c + 0.5) * elevation.resolution_m};
  p.map.tx.height_m = kDefaultTxHeightM;
  return p;
}

Metrics metrics_from_pairs(std::span<const std::vector<float>> predictions, std::span<const Example> examples) {
  if (predictions.size() != examples.size()) throw std::invalid_argument("prediction/example count mismatch");
  std::vector<double> err;
  double sq = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    if (predictions[i].size() != e.target.size()) throw std::invalid_argument("prediction size mismatch");
    for (std::size_t k = 0; k < e.target.size(); ++k) {
      if (e.weight[k] == 0.0f) continue;
      const double d = denormalize_gain(predictions[i][k]) - denormalize_gain(e.target[k]);
      sq += d * d;
      err.push_back(std::abs(d) / kTargetRangeDb * 100.0);
    }
  }
  Metrics m;
  m.cells = err.size();
  m.rmse_db = err.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(err.size()));
  m.error_percent = Ecdf(std::move(err));
  m.median_error_percent = m.error_percent.empty() ? 0.0 : m.error_percent.median();
  return m;
}

Metrics evaluate(const Weights& w, std::span<const Example> examples, int jobs) {
  if (examples.empty()) throw std::invalid_argument("empty split");
  std::vector<std::vector<float>> preds(examples.size());
  parallel_for(examples.size(), jobs, [&](std::size_t i) {
    thread_local Workspace<float> ws;
    check_example(w, examples[i]);
    w.forward(examples[i].input, ws);
    preds[i].assign(ws.output().begin(), ws.output().end());
  });
  return metrics_from_pairs(preds, examples);
}

Metrics evaluate(const Weights& w, const std::filesystem::path& dataset_dir, const DatasetManifest& manifest,
                 int rotation, Split split, int jobs) {
  const auto folds = manifest_folds(manifest);
  return evaluate(w, load_examples(dataset_dir, manifest, folds.bases_in(split, rotation)), jobs);
}

}  // namespace radiomap
