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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "radiomap/learn.hpp"

namespace radiomap::testing {

// Every op kind: coord planes, plain / dilated / 1x1 convs, max-pool,
// residual add with identity and projection shortcuts, ASPP, transposed
// conv, skip concat and the squashing head.
inline NetworkSpec toy_spec() {
  NetworkSpec s;
  s.input_px = 8;
  s.base_channels = 2;
  s.coord_channels = true;
  s.encoder = {{BlockType::conv_pool, 2, 1, true, 1},
               {BlockType::residual, 4, 2, false, 1},
               {BlockType::residual, 4, 1, true, 2},
               {BlockType::aspp, 4, 1, false, 1}};
  s.decoder = {{true, 3}, {false, 2}, {true, 2}};
  s.aspp_dilations = {1, 2};
  return s;
}

inline std::vector<float> random_image(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(n) * n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Activation pattern: ReLU/sign states of every tensor and max-pool choices.
// Identical patterns at theta +- eps mean the loss is smooth on that interval.
struct Pattern {
  std::vector<std::vector<bool>> positive;
  std::vector<std::vector<std::uint32_t>> argmax;
  bool operator==(const Pattern&) const = default;
};

inline Pattern pattern_of(const Workspace<double>& ws) {
  Pattern p;
  for (const auto& v : ws.value) {
    p.positive.emplace_back(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) p.positive.back()[k] = v[k] > 0.0;
  }
  p.argmax = ws.argmax;
  return p;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t kinked = 0;  // parameters whose +-eps interval crosses a kink
  std::map<std::string, int> bad;
  std::string first_bad;
};

// Central differences of L = sum c_k out_k for every parameter. When the
// interval crosses a ReLU or max-pool kink the difference quotient is not a
// derivative; those parameters are counted and rechecked at step 1e-6.
inline GradCheck check_gradients(Network<double>& net, const std::vector<float>& img, std::uint64_t seed, double eps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const std::size_t n_out = static_cast<std::size_t>(net.spec().input_px) * net.spec().input_px;
  std::vector<double> c(n_out);
  for (auto& x : c) x = u(rng);
  Workspace<double> ws;
  auto loss = [&] {
    net.forward(img, ws);
    double s = 0.0;
    for (std::size_t k = 0; k < n_out; ++k) s += c[k] * ws.output()[k];
    return s;
  };
  loss();
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(ws, c, grad);

  GradCheck r;
  auto quotient = [&](std::size_t k, double h, bool& smooth) {
    const double p0 = net.params()[k];
    net.params()[k] = p0 + h;
    const double lp = loss();
    const Pattern pp = pattern_of(ws);
    net.params()[k] = p0 - h;
    const double lm = loss();
    smooth = pp == pattern_of(ws);
    net.params()[k] = p0;
    return (lp - lm) / (2.0 * h);
  };
  for (const auto& t : net.tensors())
    for (std::size_t k = t.offset; k < t.offset + t.count; ++k) {
      bool smooth = true;
      double fd = quotient(k, eps, smooth);
      if (!smooth) {
        ++r.kinked;
        fd = quotient(k, 1e-6, smooth);
      }
      ++r.checked;
      const double scale = std::max({std::abs(fd), std::abs(grad[k]), 1e-4});
      if (std::abs(fd - grad[k]) > 1e-2 * scale) {
        ++r.bad[t.name];
        if (r.first_bad.empty())
          r.first_bad = t.name + "[" + std::to_string(k - t.offset) + "] analytic " + std::to_string(grad[k]) +
                        " fd " + std::to_string(fd);
      }
    }
  return r;
}

inline void randomize_biases(Network<double>& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (const auto& t : net.tensors())
    if (t.name.ends_with(".bias"))
      for (std::size_t k = 0; k < t.count; ++k) net.params()[t.offset + k] = u(rng);
}

inline NetworkSpec layer_spec(const std::string& layer) {
  NetworkSpec s;
  s.input_px = 4;
  s.base_channels = 2;
  s.coord_channels = false;
  s.encoder = {{BlockType::conv_pool, 2, 1, false, 1}};
  if (layer == "coord") s.coord_channels = true;
  if (layer == "maxpool+upconv+concat") {
    s.encoder[0].downsample = true;
    s.decoder = {{true, 2}};
  }
  if (layer == "residual") s.encoder.push_back({BlockType::residual, 4, 2, false, 2});
  if (layer == "aspp") {
    s.encoder.push_back({BlockType::aspp, 4, 1, false, 1});
    s.aspp_dilations = {1, 2};
  }
  return s;
}

}  // namespace radiomap::testing
