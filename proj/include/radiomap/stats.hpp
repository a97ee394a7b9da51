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

#include <span>
#include <string>
#include <vector>

namespace radiomap {

/// Empirical CDF over a finite sample. Values are kept sorted.
class Ecdf {
 public:
  Ecdf() = default;
  explicit Ecdf(std::vector<double> values);

  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }
  std::span<const double> values() const { return sorted_; }

  /// Fraction of samples <= x.
  double cdf(double x) const;
  /// Linear-interpolated quantile, p in [0, 1] (type-7 convention).
  double quantile(double p) const;
  double median() const;
  double max() const;
  bool degenerate_at_zero() const;

  struct Row {
    double value;
    double cumulative_prob;
  };
  /// Step points of the ECDF, thinned to at most `max_rows` evenly spaced ranks.
  std::vector<Row> table(std::size_t max_rows = 200) const;

 private:
  std::vector<double> sorted_;
};

double mean(std::span<const double> v);
double sample_stddev(std::span<const double> v);
/// Half-width of the two-sided 95% Student-t confidence interval of the mean.
double ci95_halfwidth(std::span<const double> v);
double rmse(std::span<const double> a, std::span<const double> b);

/// Shortest round-trip decimal text for a double; stable across runs.
std::string format_double(double v);

}  // namespace radiomap
