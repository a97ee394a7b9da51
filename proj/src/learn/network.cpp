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
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

#include "radiomap/io.hpp"
#include "radiomap/learn.hpp"
#include "radiomap/random.hpp"

namespace radiomap {

using detail::ConvOp;
using detail::Op;
using detail::OpKind;
using detail::Shape;

std::string to_string(BlockType b) {
  switch (b) {
    case BlockType::conv_pool: return "conv_pool";
    case BlockType::residual: return "residual";
    case BlockType::aspp: return "aspp";
  }
  throw std::logic_error("unknown block type");
}

namespace {

BlockType block_from_string(const std::string& s) {
  for (auto b : {BlockType::conv_pool, BlockType::residual, BlockType::aspp})
    if (to_string(b) == s) return b;
  throw std::invalid_argument("unknown block type: " + s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

void NetworkSpec::validate() const {
  if (input_px < 1) throw std::invalid_argument("input_px must be positive");
  if (base_channels < 1) throw std::invalid_argument("base_channels must be positive");
  if (encoder.empty()) throw std::invalid_argument("encoder needs at least one stage");
  int downs = 0, ups = 0;
  for (const auto& s : encoder) {
    if (s.channels < 1) throw std::invalid_argument("encoder channel counts must be positive");
    if (s.type == BlockType::residual && s.blocks < 1) throw std::invalid_argument("residual stage needs >= 1 block");
    if (s.dilation < 1) throw std::invalid_argument("dilation must be >= 1");
    if (s.type == BlockType::aspp && s.downsample) throw std::invalid_argument("aspp stage cannot downsample");
    downs += s.downsample;
  }
  for (const auto& s : decoder) {
    if (s.channels < 1) throw std::invalid_argument("decoder channel counts must be positive");
    ups += s.upsample;
  }
  if (downs != ups)
    throw std::invalid_argument("encoder downsamples " + std::to_string(downs) + " times but decoder upsamples " +
                                std::to_string(ups) + " times");
  if (input_px % (1 << downs) != 0)
    throw std::invalid_argument("input_px " + std::to_string(input_px) + " is not divisible by 2^" +
                                std::to_string(downs));
  if (aspp_dilations.empty()) throw std::invalid_argument("aspp needs at least one dilation");
  for (int d : aspp_dilations)
    if (d < 1) throw std::invalid_argument("dilation must be >= 1");
}

nlohmann::json NetworkSpec::to_json() const {
  json enc = json::array(), dec = json::array();
  for (const auto& s : encoder)
    enc.push_back({{"type", to_string(s.type)},
                   {"channels", s.channels},
                   {"blocks", s.blocks},
                   {"downsample", s.downsample},
                   {"dilation", s.dilation}});
  for (const auto& s : decoder) dec.push_back({{"upsample", s.upsample}, {"channels", s.channels}});
  return {{"input_px", input_px},   {"base_channels", base_channels}, {"coord_channels", coord_channels},
          {"encoder", enc},         {"decoder", dec},                 {"aspp_dilations", aspp_dilations}};
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& doc) {
  NetworkSpec s;
  try {
    s.input_px = doc.at("input_px").get<int>();
    s.base_channels = doc.at("base_channels").get<int>();
    s.coord_channels = doc.at("coord_channels").get<bool>();
    s.aspp_dilations = doc.at("aspp_dilations").get<std::vector<int>>();
    for (const auto& e : doc.at("encoder"))
      s.encoder.push_back({block_from_string(e.at("type").get<std::string>()), e.at("channels").get<int>(),
                           e.at("blocks").get<int>(), e.at("downsample").get<bool>(), e.at("dilation").get<int>()});
    for (const auto& d : doc.at("decoder"))
      s.decoder.push_back({d.at("upsample").get<bool>(), d.at("channels").get<int>()});
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed network spec: ") + e.what());
  }
  s.validate();
  return s;
}

NetworkSpec NetworkSpec::desk(int input_px, int base) {
  NetworkSpec s;
  s.input_px = input_px;
  s.base_channels = base;
  s.encoder = {{BlockType::conv_pool, base, 1, true, 1},
               {BlockType::residual, 2 * base, 2, false, 1},
               {BlockType::residual, 4 * base, 2, true, 1},
               {BlockType::residual, 8 * base, 4, true, 1},
               {BlockType::residual, 8 * base, 2, false, 2},
               {BlockType::aspp, 8 * base, 1, false, 1}};
  s.decoder = {{true, 2 * base}, {true, base}, {true, std::max(1, base / 2)}};
  s.validate();
  return s;
}

NetworkSpec NetworkSpec::paper_scale() {
  NetworkSpec s;
  s.input_px = 200;
  s.base_channels = 64;
  s.coord_channels = false;
  s.encoder = {{BlockType::conv_pool, 64, 1, true, 1},   {BlockType::residual, 256, 3, false, 1},
               {BlockType::residual, 512, 3, true, 1},   {BlockType::residual, 512, 27, true, 1},
               {BlockType::residual, 1024, 3, false, 2}, {BlockType::aspp, 1024, 1, false, 1}};
  s.decoder = {{false, 512}, {true, 512}, {true, 256}, {false, 256}, {false, 128}, {true, 64}};
  s.aspp_dilations = {6, 12, 18};
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Graph construction

template <class T>
Network<T>::Network(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec), seed_(seed) {
  spec_.validate();
  std::vector<double> bounds;
  build(&bounds);
  params_.resize(bounds.size());
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t k = 0; k < params_.size(); ++k) params_[k] = static_cast<T>(bounds[k] * u(rng));
}

template <class T>
void Network<T>::build(std::vector<double>* bounds) {
  ops_.clear();
  shapes_.clear();
  tensors_.clear();
  std::size_t n_params = 0;
  const int n = spec_.input_px;

  auto tensor = [&](Shape s) {
    shapes_.push_back(s);
    return static_cast<int>(shapes_.size()) - 1;
  };
  auto add_param = [&](const std::string& name, std::vector<int> shape, double bound) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    tensors_.push_back({name, std::move(shape), n_params, count});
    if (bounds) bounds->insert(bounds->end(), count, bound);
    n_params += count;
    return tensors_.back().offset;
  };
  auto conv = [&](int in, int cout, int k, int dil, bool relu, const std::string& name, double gain = 1.0) {
    Op op;
    op.kind = OpKind::conv;
    op.in0 = in;
    const Shape& s = shapes_[in];
    op.conv = {s.c, cout, k, dil, relu, 0, 0};
    const double fan_in = static_cast<double>(s.c) * k * k;
    op.conv.w = add_param(name + ".weight", {cout, s.c, k, k}, gain * std::sqrt((relu ? 6.0 : 3.0) / fan_in));
    op.conv.b = add_param(name + ".bias", {cout}, 0.0);
    op.out = tensor({cout, s.h, s.w});
    ops_.push_back(op);
    return op.out;
  };
  auto upconv = [&](int in, int cout, const std::string& name) {
    Op op;
    op.kind = OpKind::upconv;
    op.in0 = in;
    const Shape& s = shapes_[in];
    op.conv = {s.c, cout, 2, 1, true, 0, 0};
    op.conv.w = add_param(name + ".weight", {cout, 2, 2, s.c}, std::sqrt(6.0 / s.c));
    op.conv.b = add_param(name + ".bias", {cout}, 0.0);
    op.out = tensor({cout, 2 * s.h, 2 * s.w});
    ops_.push_back(op);
    return op.out;
  };
  auto unary = [&](OpKind kind, int in, Shape out_shape) {
    Op op;
    op.kind = kind;
    op.in0 = in;
    op.out = tensor(out_shape);
    ops_.push_back(op);
    return op.out;
  };
  auto binary = [&](OpKind kind, int a, int b, Shape out_shape) {
    Op op;
    op.kind = kind;
    op.in0 = a;
    op.in1 = b;
    op.out = tensor(out_shape);
    ops_.push_back(op);
    return op.out;
  };
  auto pool = [&](int in) {
    const Shape& s = shapes_[in];
    return unary(OpKind::maxpool, in, {s.c, s.h / 2, s.w / 2});
  };
  auto concat = [&](int a, int b) {
    const Shape sa = shapes_[a], sb = shapes_[b];
    return binary(OpKind::concat, a, b, {sa.c + sb.c, sa.h, sa.w});
  };

  int total_blocks = 0;
  for (const auto& st : spec_.encoder)
    if (st.type == BlockType::residual) total_blocks += st.blocks;
  const double residual_gain = total_blocks > 0 ? 1.0 / std::sqrt(static_cast<double>(total_blocks)) : 1.0;

  int x = tensor({1, n, n});
  coord_.clear();
  if (spec_.coord_channels) {
    x = unary(OpKind::coord, x, {3, n, n});
    // log-distance and distance to the image center, each scaled to [0, 1)
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    coord_.resize(2 * nn);
    const double c = 0.5 * (n - 1);
    const double dmax = std::sqrt(2.0) * 0.5 * n;
    const double lmax = std::log1p(dmax);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * n + i;
        const double d = std::hypot(i - c, j - c);
        coord_[k] = static_cast<T>(std::log1p(d) / lmax);
        coord_[nn + k] = static_cast<T>(d / dmax);
      }
  }
  std::map<int, int> skips;  // spatial size -> tensor

  for (std::size_t si = 0; si < spec_.encoder.size(); ++si) {
    const auto& st = spec_.encoder[si];
    const std::string stage = "enc" + std::to_string(si);
    switch (st.type) {
      case BlockType::conv_pool:
        x = conv(x, st.channels, 3, 1, true, stage + ".conv");
        if (st.downsample) {
          skips[shapes_[x].h] = x;
          x = pool(x);
        }
        break;
      case BlockType::residual:
        if (st.downsample) {
          skips[shapes_[x].h] = x;
          x = pool(x);
        }
        for (int b = 0; b < st.blocks; ++b) {
          const std::string blk = stage + ".block" + std::to_string(b);
          const int mid = std::max(1, st.channels / 4);
          int a = conv(x, mid, 1, 1, true, blk + ".reduce");
          a = conv(a, mid, 3, st.dilation, true, blk + ".conv");
          a = conv(a, st.channels, 1, 1, false, blk + ".expand", residual_gain);
          const int sc = shapes_[x].c == st.channels ? x : conv(x, st.channels, 1, 1, false, blk + ".proj");
          x = binary(OpKind::add_relu, a, sc, shapes_[a]);
        }
        break;
      case BlockType::aspp: {
        const int width = std::max(1, st.channels / 4);
        int cat = -1;
        for (std::size_t d = 0; d < spec_.aspp_dilations.size(); ++d) {
          const int br = conv(x, width, 3, spec_.aspp_dilations[d], true, stage + ".branch" + std::to_string(d));
          cat = cat < 0 ? br : concat(cat, br);
        }
        x = conv(cat, st.channels, 1, 1, true, stage + ".fc1");
        break;
      }
    }
  }
  for (std::size_t si = 0; si < spec_.decoder.size(); ++si) {
    const auto& st = spec_.decoder[si];
    const std::string stage = "dec" + std::to_string(si);
    if (st.upsample) {
      x = upconv(x, st.channels, stage + ".up");
      const auto it = skips.find(shapes_[x].h);
      if (it != skips.end()) x = concat(x, it->second);
    }
    x = conv(x, st.channels, 3, 1, true, stage + ".conv");
  }
  x = conv(x, 1, 1, 1, false, "head");
  x = unary(OpKind::sigmoid, x, shapes_[x]);
  if (shapes_[x].h != n) throw std::logic_error("network output size differs from input");
  if (!bounds) params_.resize(n_params);
}

template <class T>
template <class U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.spec_ = spec_;
  out.seed_ = seed_;
  out.tensors_ = tensors_;
  out.ops_ = ops_;
  out.shapes_ = shapes_;
  out.coord_.assign(coord_.begin(), coord_.end());
  out.params_.assign(params_.begin(), params_.end());
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<Mat<T>>;
template <class T>
using CMapM = Eigen::Map<const Mat<T>>;

// cols[(ci*k + ky)*k + kx][y*w + x] = in[ci][y + ky*dil - pad][x + kx*dil - pad]
template <class T>
void im2col(const T* in, int c, int h, int w, int k, int dil, T* cols) {
  const int pad = dil * (k / 2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + static_cast<std::size_t>((ci * k + ky) * k + kx) * hw;
        const int dy = ky * dil - pad, dx = kx * dil - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          T* r = row + static_cast<std::size_t>(y) * w;
          const int yy = y + dy;
          if (yy < 0 || yy >= h || x0 >= x1) {
            std::fill(r, r + w, T(0));
            continue;
          }
          const T* src = in + (static_cast<std::size_t>(ci) * h + yy) * w + dx;
          std::fill(r, r + x0, T(0));
          std::copy(src + x0, src + x1, r + x0);
          std::fill(r + x1, r + w, T(0));
        }
      }
}

template <class T>
void col2im_add(const T* cols, int c, int h, int w, int k, int dil, T* out) {
  const int pad = dil * (k / 2);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + static_cast<std::size_t>((ci * k + ky) * k + kx) * hw;
        const int dy = ky * dil - pad, dx = kx * dil - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        if (x0 >= x1) continue;
        for (int y = 0; y < h; ++y) {
          const int yy = y + dy;
          if (yy < 0 || yy >= h) continue;
          const T* r = row + static_cast<std::size_t>(y) * w;
          T* dst = out + (static_cast<std::size_t>(ci) * h + yy) * w + dx;
          for (int x = x0; x < x1; ++x) dst[x] += r[x];
        }
      }
}

// Direct convolution, out zeroed by the caller. Beats im2col + GEMM when
// the output has few channels.
template <class T>
void direct_conv(const T* in, int cin, int h, int w, const T* wt, int cout, int k, int dil, T* out) {
  const int pad = dil * (k / 2);
  for (int co = 0; co < cout; ++co) {
    T* plane = out + static_cast<std::size_t>(co) * h * w;
    for (int ci = 0; ci < cin; ++ci)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wt[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
          const int dy = ky * dil - pad, dx = kx * dil - pad;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          for (int y = y0; y < y1; ++y) {
            const T* src = in + (static_cast<std::size_t>(ci) * h + y + dy) * w + dx;
            T* dst = plane + static_cast<std::size_t>(y) * w;
            for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
          }
        }
  }
}

constexpr int kDirectMaxCout = 4;

}  // namespace

template <class T>
void Network<T>::forward(std::span<const float> image, Workspace<T>& ws) const {
  const int n = spec_.input_px;
  if (image.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("input has " + std::to_string(image.size()) + " values, network expects " +
                                std::to_string(n) + "x" + std::to_string(n));
  ws.value.resize(shapes_.size());
  ws.argmax.resize(shapes_.size());
  for (std::size_t t = 0; t < shapes_.size(); ++t) ws.value[t].resize(shapes_[t].size());
  std::copy(image.begin(), image.end(), ws.value[0].begin());
  const T* p = params_.data();

  for (const Op& op : ops_) {
    const Shape& so = shapes_[op.out];
    T* out = ws.value[op.out].data();
    const std::size_t hw_out = static_cast<std::size_t>(so.h) * so.w;
    switch (op.kind) {
      case OpKind::coord:
        std::copy(image.begin(), image.end(), out);
        std::copy(coord_.begin(), coord_.end(), out + image.size());
        break;
      case OpKind::conv: {
        const ConvOp& c = op.conv;
        const Shape& si = shapes_[op.in0];
        const T* in = ws.value[op.in0].data();
        const int kk = c.cin * c.k * c.k;
        const T* cols = in;
        if (c.k > 1 && c.cout <= kDirectMaxCout) {
          std::fill(out, out + so.size(), T(0));
          direct_conv(in, si.c, si.h, si.w, p + c.w, c.cout, c.k, c.dil, out);
        } else if (c.k > 1) {
          ws.cols.resize(static_cast<std::size_t>(kk) * hw_out);
          im2col(in, si.c, si.h, si.w, c.k, c.dil, ws.cols.data());
          cols = ws.cols.data();
        }
        if (c.k == 1 || c.cout > kDirectMaxCout) {
          MapM<T> y(out, c.cout, static_cast<Eigen::Index>(hw_out));
          y.noalias() = CMapM<T>(p + c.w, c.cout, kk) * CMapM<T>(cols, kk, static_cast<Eigen::Index>(hw_out));
        }
        for (int co = 0; co < c.cout; ++co) {
          T* row = out + static_cast<std::size_t>(co) * hw_out;
          const T b = p[c.b + co];
          if (c.relu)
            for (std::size_t q = 0; q < hw_out; ++q) row[q] = std::max(row[q] + b, T(0));
          else
            for (std::size_t q = 0; q < hw_out; ++q) row[q] += b;
        }
        break;
      }
      case OpKind::upconv: {
        const ConvOp& c = op.conv;
        const Shape& si = shapes_[op.in0];
        const std::size_t hw_in = static_cast<std::size_t>(si.h) * si.w;
        ws.cols.resize(static_cast<std::size_t>(4 * c.cout) * hw_in);
        MapM<T> z(ws.cols.data(), 4 * c.cout, static_cast<Eigen::Index>(hw_in));
        z.noalias() = CMapM<T>(p + c.w, 4 * c.cout, c.cin) *
                      CMapM<T>(ws.value[op.in0].data(), c.cin, static_cast<Eigen::Index>(hw_in));
        for (int co = 0; co < c.cout; ++co) {
          const T b = p[c.b + co];
          for (int a = 0; a < 4; ++a) {
            const T* zr = ws.cols.data() + static_cast<std::size_t>(co * 4 + a) * hw_in;
            const int oy = a / 2, ox = a % 2;
            for (int y = 0; y < si.h; ++y)
              for (int x = 0; x < si.w; ++x) {
                const T v = zr[static_cast<std::size_t>(y) * si.w + x] + b;
                out[(static_cast<std::size_t>(co) * so.h + 2 * y + oy) * so.w + 2 * x + ox] = std::max(v, T(0));
              }
          }
        }
        break;
      }
      case OpKind::maxpool: {
        const Shape& si = shapes_[op.in0];
        const T* in = ws.value[op.in0].data();
        auto& am = ws.argmax[op.out];
        am.resize(so.size());
        for (int ch = 0; ch < so.c; ++ch)
          for (int y = 0; y < so.h; ++y)
            for (int x = 0; x < so.w; ++x) {
              std::size_t best = (static_cast<std::size_t>(ch) * si.h + 2 * y) * si.w + 2 * x;
              for (std::size_t cand : {best + 1, best + si.w, best + si.w + 1})
                if (in[cand] > in[best]) best = cand;
              const std::size_t o = (static_cast<std::size_t>(ch) * so.h + y) * so.w + x;
              out[o] = in[best];
              am[o] = static_cast<std::uint32_t>(best);
            }
        break;
      }
      case OpKind::add_relu: {
        const T* a = ws.value[op.in0].data();
        const T* b = ws.value[op.in1].data();
        for (std::size_t q = 0; q < so.size(); ++q) out[q] = std::max(a[q] + b[q], T(0));
        break;
      }
      case OpKind::concat: {
        const auto& a = ws.value[op.in0];
        const auto& b = ws.value[op.in1];
        std::copy(a.begin(), a.end(), out);
        std::copy(b.begin(), b.end(), out + a.size());
        break;
      }
      case OpKind::sigmoid: {
        const T* in = ws.value[op.in0].data();
        // NaN pre-activations (inf - inf upstream) map to the midpoint
        for (std::size_t q = 0; q < so.size(); ++q)
          out[q] = std::isnan(in[q]) ? T(0.5) : T(1) / (T(1) + std::exp(-in[q]));
        break;
      }
    }
  }
}

template <class T>
void Network<T>::backward(Workspace<T>& ws, std::span<const T> dout, std::span<T> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
  if (dout.size() != shapes_.back().size()) throw std::invalid_argument("output gradient size mismatch");
  ws.grad.resize(shapes_.size());
  for (std::size_t t = 0; t < shapes_.size(); ++t) ws.grad[t].assign(shapes_[t].size(), T(0));
  std::copy(dout.begin(), dout.end(), ws.grad.back().begin());
  // tensors before the first trainable op never need gradients
  const int first_trainable = spec_.coord_channels ? 2 : 1;
  const T* p = params_.data();
  T* g = grad.data();

  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    const Op& op = *it;
    const Shape& so = shapes_[op.out];
    const std::size_t hw_out = static_cast<std::size_t>(so.h) * so.w;
    T* gout = ws.grad[op.out].data();
    const T* out = ws.value[op.out].data();
    const bool need_in = op.in0 >= first_trainable;
    switch (op.kind) {
      case OpKind::coord:
        break;
      case OpKind::conv: {
        const ConvOp& c = op.conv;
        const Shape& si = shapes_[op.in0];
        const T* in = ws.value[op.in0].data();
        if (c.relu)
          for (std::size_t q = 0; q < so.size(); ++q)
            if (out[q] <= T(0)) gout[q] = T(0);
        const int kk = c.cin * c.k * c.k;
        const auto hw = static_cast<Eigen::Index>(hw_out);
        const T* cols = in;
        if (c.k > 1) {
          ws.cols.resize(static_cast<std::size_t>(kk) * hw_out);
          im2col(in, si.c, si.h, si.w, c.k, c.dil, ws.cols.data());
          cols = ws.cols.data();
        }
        CMapM<T> dy(gout, c.cout, hw);
        MapM<T>(g + c.w, c.cout, kk).noalias() += dy * CMapM<T>(cols, kk, hw).transpose();
        for (int co = 0; co < c.cout; ++co) {
          const T* row = gout + static_cast<std::size_t>(co) * hw_out;
          T bsum = T(0);
          for (std::size_t q = 0; q < hw_out; ++q) bsum += row[q];
          g[c.b + co] += bsum;
        }
        if (!need_in) break;
        if (c.k == 1) {
          MapM<T>(ws.grad[op.in0].data(), c.cin, hw).noalias() += CMapM<T>(p + c.w, c.cout, kk).transpose() * dy;
        } else {
          ws.dcols.resize(static_cast<std::size_t>(kk) * hw_out);
          MapM<T>(ws.dcols.data(), kk, hw).noalias() = CMapM<T>(p + c.w, c.cout, kk).transpose() * dy;
          col2im_add(ws.dcols.data(), si.c, si.h, si.w, c.k, c.dil, ws.grad[op.in0].data());
        }
        break;
      }
      case OpKind::upconv: {
        const ConvOp& c = op.conv;
        const Shape& si = shapes_[op.in0];
        const std::size_t hw_in = static_cast<std::size_t>(si.h) * si.w;
        const auto hw = static_cast<Eigen::Index>(hw_in);
        ws.dcols.resize(static_cast<std::size_t>(4 * c.cout) * hw_in);
        for (int co = 0; co < c.cout; ++co) {
          T bsum = T(0);
          for (int a = 0; a < 4; ++a) {
            T* zr = ws.dcols.data() + static_cast<std::size_t>(co * 4 + a) * hw_in;
            const int oy = a / 2, ox = a % 2;
            for (int y = 0; y < si.h; ++y)
              for (int x = 0; x < si.w; ++x) {
                const std::size_t o = (static_cast<std::size_t>(co) * so.h + 2 * y + oy) * so.w + 2 * x + ox;
                const T v = out[o] > T(0) ? gout[o] : T(0);
                zr[static_cast<std::size_t>(y) * si.w + x] = v;
              }
          }
          for (int a = 0; a < 4; ++a) {
            const T* zr = ws.dcols.data() + static_cast<std::size_t>(co * 4 + a) * hw_in;
            for (std::size_t q = 0; q < hw_in; ++q) bsum += zr[q];
          }
          g[c.b + co] += bsum;
        }
        CMapM<T> dz(ws.dcols.data(), 4 * c.cout, hw);
        MapM<T>(g + c.w, 4 * c.cout, c.cin).noalias() +=
            dz * CMapM<T>(ws.value[op.in0].data(), c.cin, hw).transpose();
        if (need_in)
          MapM<T>(ws.grad[op.in0].data(), c.cin, hw).noalias() += CMapM<T>(p + c.w, 4 * c.cout, c.cin).transpose() * dz;
        break;
      }
      case OpKind::maxpool: {
        if (!need_in) break;
        const auto& am = ws.argmax[op.out];
        T* gin = ws.grad[op.in0].data();
        for (std::size_t q = 0; q < so.size(); ++q) gin[am[q]] += gout[q];
        break;
      }
      case OpKind::add_relu: {
        T* ga = ws.grad[op.in0].data();
        T* gb = ws.grad[op.in1].data();
        for (std::size_t q = 0; q < so.size(); ++q)
          if (out[q] > T(0)) {
            ga[q] += gout[q];
            gb[q] += gout[q];
          }
        break;
      }
      case OpKind::concat: {
        auto& ga = ws.grad[op.in0];
        auto& gb = ws.grad[op.in1];
        for (std::size_t q = 0; q < ga.size(); ++q) ga[q] += gout[q];
        for (std::size_t q = 0; q < gb.size(); ++q) gb[q] += gout[ga.size() + q];
        break;
      }
      case OpKind::sigmoid: {
        T* gin = ws.grad[op.in0].data();
        for (std::size_t q = 0; q < so.size(); ++q) gin[q] += gout[q] * out[q] * (T(1) - out[q]);
        break;
      }
    }
  }
}

template class Network<float>;
template class Network<double>;
template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;

Weights build_network(const NetworkSpec& spec, std::uint64_t seed) { return Weights(spec, seed); }

std::vector<float> forward(const Weights& w, const NormalizedImage& image) {
  if (image.size_px != w.spec().input_px)
    throw std::invalid_argument("image is " + std::to_string(image.size_px) + " px, network expects " +
                                std::to_string(w.spec().input_px));
  thread_local Workspace<float> ws;
  w.forward(image.values, ws);
  return {ws.output().begin(), ws.output().end()};
}

// ---------------------------------------------------------------------------
// Weights file: {stem}.json header with a tensor index, {stem}.f32 blob.

void save_weights(const std::filesystem::path& stem, const Weights& w, const nlohmann::json& meta) {
  json index = json::array();
  for (const auto& t : w.tensors())
    index.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", t.offset}, {"count", t.count}});
  const json header = {{"format", "radiomap-weights"},
                       {"version", 1},
                       {"spec", w.spec().to_json()},
                       {"seed", w.seed()},
                       {"parameter_count", w.parameter_count()},
                       {"meta", meta},
                       {"tensors", index}};
  const auto values = w.params();
  const std::string bytes(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  auto json_path = stem;
  json_path += ".json";
  auto f32_path = stem;
  f32_path += ".f32";
  write_file_atomic(f32_path, bytes);
  write_json(json_path, header);
}

Weights load_weights(const std::filesystem::path& stem, nlohmann::json* meta) {
  auto json_path = stem;
  json_path += ".json";
  auto f32_path = stem;
  f32_path += ".f32";
  const json header = read_json(json_path);
  if (header.value("format", "") != "radiomap-weights") throw std::runtime_error(json_path.string() + ": not a weights file");
  const auto spec = NetworkSpec::from_json(header.at("spec"));
  Weights w(spec, header.at("seed").get<std::uint64_t>());
  const std::string bytes = read_file(f32_path);
  if (bytes.size() != w.parameter_count() * sizeof(float))
    throw std::runtime_error(f32_path.string() + ": expected " + std::to_string(w.parameter_count()) +
                             " parameters, found " + std::to_string(bytes.size() / sizeof(float)));
  if (header.at("parameter_count").get<std::size_t>() != w.parameter_count())
    throw std::runtime_error(json_path.string() + ": parameter count does not match the spec");
  std::memcpy(w.params().data(), bytes.data(), bytes.size());
  for (float v : w.params())
    if (!std::isfinite(v)) throw std::runtime_error(f32_path.string() + ": non-finite parameter");
  if (meta) *meta = header.value("meta", json::object());
  return w;
}

}  // namespace radiomap
