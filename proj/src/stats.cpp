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

#include "radiomap/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace radiomap {

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
  for (double v : sorted_)
    if (std::isnan(v)) throw std::invalid_argument("ECDF sample contains NaN");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::cdf(double x) const {
  if (sorted_.empty()) return 0.0;
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::quantile(double p) const {
  if (sorted_.empty()) throw std::logic_error("quantile of empty ECDF");
  p = std::clamp(p, 0.0, 1.0);
  const double pos = p * static_cast<double>(sorted_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted_[lo];
  return sorted_[lo] + frac * (sorted_[hi] - sorted_[lo]);
}

double Ecdf::median() const { return quantile(0.5); }

double Ecdf::max() const {
  if (sorted_.empty()) throw std::logic_error("max of empty ECDF");
  return sorted_.back();
}

bool Ecdf::degenerate_at_zero() const {
  return std::all_of(sorted_.begin(), sorted_.end(), [](double v) { return v == 0.0; });
}

std::vector<Ecdf::Row> Ecdf::table(std::size_t max_rows) const {
  std::vector<Row> rows;
  const std::size_t n = sorted_.size();
  if (n == 0) return rows;
  const std::size_t count = std::min(n, std::max<std::size_t>(max_rows, 2));
  rows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    // evenly spaced ranks, always including the first and last sample
    const std::size_t rank = count == 1 ? n - 1 : (k * (n - 1)) / (count - 1);
    rows.push_back({sorted_[rank], static_cast<double>(rank + 1) / static_cast<double>(n)});
  }
  return rows;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double ci95_halfwidth(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  boost::math::students_t dist(static_cast<double>(v.size() - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return t * sample_stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
  if (a.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss / static_cast<double>(a.size()));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace radiomap
