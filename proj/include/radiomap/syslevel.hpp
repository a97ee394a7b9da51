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

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiomap/stats.hpp"

namespace radiomap {

struct LinkBudget {
  double tx_power_dbm = 44.0;
  double bandwidth_hz = 2e6;
  double noise_figure_db = 7.0;

  /// -174 dBm/Hz + 10 log10(bandwidth) + noise figure.
  double noise_power_dbm() const;
  void validate() const;
  nlohmann::json to_json() const;
  static LinkBudget from_json(const nlohmann::json& doc);
};

struct McsEntry {
  int index = 0;
  double spectral_efficiency = 0.0;  // bits/s/Hz
  double snr_threshold_db = 0.0;
  double bler_slope = 1.0;  // dB
};

struct McsTable {
  std::vector<McsEntry> entries;

  /// 15 entries, thresholds -6 .. 22 dB in 2 dB steps, efficiencies 0.2 .. 5.6.
  static McsTable default_table();
  void validate() const;
  nlohmann::json to_json() const;
  static McsTable from_json(const nlohmann::json& doc);
};

double sinr_db(double path_gain_db, const LinkBudget& budget);
/// bandwidth * log2(1 + 10^(sinr/10)), in bits/s.
double shannon_capacity(double sinr_db, double bandwidth_hz);
/// 1 / (1 + exp((sinr - threshold) / slope)).
double bler(double sinr_db, const McsEntry& entry);

struct OllaState {
  double offset_db = 0.0;
  double target_bler = 0.1;
  double step_up_db = 0.5;

  double step_down_db() const { return step_up_db * target_bler / (1.0 - target_bler); }
  void validate() const;
};

/// NACK raises the offset by step_up, ACK lowers it by step_down.
OllaState olla_step(const OllaState& state, bool ack);

/// Position of the highest entry with threshold <= sinr - offset, else 0.
int select_mcs(double sinr_db, const OllaState& olla, const McsTable& table);

/// One-tap channel. Only the power enters the link metrics.
struct SingleTapChannel {
  double path_gain_db = 0.0;
  double delay_s = 0.0;
  double phase_rad = 0.0;
  std::complex<double> tap() const;
};

struct LinkResult {
  double sinr_db = 0.0;
  double capacity_bps = 0.0;
  /// Mean over slots of the selected efficiency times (1 - block error probability).
  double spectral_efficiency = 0.0;
  /// Mean over slots of the block error probability at the selected MCS.
  double bler = 0.0;
  /// Fraction of slots with a NACK.
  double nack_rate = 0.0;
  double final_offset_db = 0.0;
};

/// Runs n_slots of the OLLA loop. ACKs are drawn as u >= p with u from `seed`,
/// so two channels run with the same seed share their random numbers.
LinkResult simulate_link(const SingleTapChannel& channel, const LinkBudget& budget, const McsTable& table,
                         const OllaState& olla, int n_slots, std::uint64_t seed);

struct SystemPointError {
  LinkResult truth, model;
  double capacity_error_bps = 0.0;
  double capacity_error_relative = 0.0;  // over the truth-driven capacity
  double efficiency_error = 0.0;
  double bler_error = 0.0;
};

struct SystemErrorReport {
  std::vector<SystemPointError> points;
  Ecdf capacity_error_bps, capacity_error_relative, efficiency_error, bler_error;

  nlohmann::json summary() const;
  /// metric, error, cumulative_prob
  std::string ecdf_csv() const;
};

struct SystemConfig {
  LinkBudget budget;
  McsTable table = McsTable::default_table();
  OllaState olla;
  int n_slots = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static SystemConfig from_json(const nlohmann::json& doc);
};

SystemErrorReport compare_system_error(std::span<const double> true_pg_db, std::span<const double> model_pg_db,
                                       const SystemConfig& cfg);

}  // namespace radiomap
