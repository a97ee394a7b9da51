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

#include "radiomap/syslevel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "radiomap/io.hpp"
#include "radiomap/parallel.hpp"
#include "radiomap/random.hpp"

namespace radiomap {

double LinkBudget::noise_power_dbm() const { return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db; }

void LinkBudget::validate() const {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) throw std::invalid_argument("bandwidth_hz must be > 0");
  if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_figure_db))
    throw std::invalid_argument("link budget values must be finite");
}

nlohmann::json LinkBudget::to_json() const {
  return {{"tx_power_dbm", tx_power_dbm}, {"bandwidth_hz", bandwidth_hz}, {"noise_figure_db", noise_figure_db}};
}

LinkBudget LinkBudget::from_json(const nlohmann::json& doc) {
  LinkBudget b;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "tx_power_dbm") b.tx_power_dbm = it->get<double>();
    else if (k == "bandwidth_hz") b.bandwidth_hz = it->get<double>();
    else if (k == "noise_figure_db") b.noise_figure_db = it->get<double>();
    else throw std::invalid_argument("unknown link budget key: " + k);
  }
  b.validate();
  return b;
}

McsTable McsTable::default_table() {
  McsTable t;
  for (int i = 0; i < 15; ++i) t.entries.push_back({i, 0.2 + 5.4 * i / 14.0, -6.0 + 2.0 * i, 1.0});
  return t;
}

void McsTable::validate() const {
  if (entries.empty()) throw std::invalid_argument("MCS table is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!(e.bler_slope > 0.0)) throw std::invalid_argument("MCS entry " + std::to_string(e.index) + ": slope must be > 0");
    if (!(e.spectral_efficiency > 0.0) || !std::isfinite(e.snr_threshold_db))
      throw std::invalid_argument("MCS entry " + std::to_string(e.index) + ": invalid efficiency or threshold");
    if (i > 0 && !(e.snr_threshold_db > entries[i - 1].snr_threshold_db))
      throw std::invalid_argument("MCS thresholds must increase strictly");
    if (i > 0 && !(e.spectral_efficiency > entries[i - 1].spectral_efficiency))
      throw std::invalid_argument("MCS efficiencies must increase strictly");
  }
}

nlohmann::json McsTable::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"index", e.index},
                   {"spectral_efficiency", e.spectral_efficiency},
                   {"snr_threshold_db", e.snr_threshold_db},
                   {"bler_slope", e.bler_slope}});
  return arr;
}

McsTable McsTable::from_json(const nlohmann::json& doc) {
  McsTable t;
  for (const auto& e : doc)
    t.entries.push_back({e.at("index").get<int>(), e.at("spectral_efficiency").get<double>(),
                         e.at("snr_threshold_db").get<double>(), e.at("bler_slope").get<double>()});
  t.validate();
  return t;
}

double sinr_db(double path_gain_db, const LinkBudget& budget) {
  return budget.tx_power_dbm + path_gain_db - budget.noise_power_dbm();
}

double shannon_capacity(double sinr, double bandwidth_hz) {
  return bandwidth_hz * std::log2(1.0 + std::pow(10.0, sinr / 10.0));
}

double bler(double sinr, const McsEntry& entry) {
  return 1.0 / (1.0 + std::exp((sinr - entry.snr_threshold_db) / entry.bler_slope));
}

void OllaState::validate() const {
  if (!(target_bler > 0.0 && target_bler < 1.0)) throw std::invalid_argument("target_bler must be in (0, 1)");
  if (!(step_up_db > 0.0) || !std::isfinite(step_up_db)) throw std::invalid_argument("step_up_db must be > 0");
  if (!std::isfinite(offset_db)) throw std::invalid_argument("OLLA offset must be finite");
}

OllaState olla_step(const OllaState& state, bool ack) {
  OllaState s = state;
  s.offset_db += ack ? -s.step_down_db() : s.step_up_db;
  return s;
}

int select_mcs(double sinr, const OllaState& olla, const McsTable& table) {
  if (table.entries.empty()) throw std::invalid_argument("MCS table is empty");
  const double eff = sinr - olla.offset_db;
  int best = 0;
  for (std::size_t i = 0; i < table.entries.size(); ++i)
    if (table.entries[i].snr_threshold_db <= eff) best = static_cast<int>(i);
  return best;
}

std::complex<double> SingleTapChannel::tap() const {
  return std::polar(std::pow(10.0, path_gain_db / 20.0), phase_rad);
}

LinkResult simulate_link(const SingleTapChannel& channel, const LinkBudget& budget, const McsTable& table,
                         const OllaState& olla, int n_slots, std::uint64_t seed) {
  if (n_slots < 1) throw std::invalid_argument("n_slots must be >= 1");
  olla.validate();
  LinkResult r;
  r.sinr_db = sinr_db(channel.path_gain_db, budget);
  r.capacity_bps = shannon_capacity(r.sinr_db, budget.bandwidth_hz);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OllaState s = olla;
  double eff = 0.0, err = 0.0;
  int nacks = 0;
  for (int t = 0; t < n_slots; ++t) {
    const auto& e = table.entries[static_cast<std::size_t>(select_mcs(r.sinr_db, s, table))];
    const double p = bler(r.sinr_db, e);
    const bool ack = unit(rng) >= p;
    eff += e.spectral_efficiency * (1.0 - p);
    err += p;
    nacks += ack ? 0 : 1;
    s = olla_step(s, ack);
  }
  r.spectral_efficiency = eff / n_slots;
  r.bler = err / n_slots;
  r.nack_rate = static_cast<double>(nacks) / n_slots;
  r.final_offset_db = s.offset_db;
  return r;
}

void SystemConfig::validate() const {
  budget.validate();
  table.validate();
  olla.validate();
  if (n_slots < 1) throw std::invalid_argument("n_slots must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

nlohmann::json SystemConfig::to_json() const {
  return {{"budget", budget.to_json()},
          {"mcs_table", table.to_json()},
          {"olla", {{"target_bler", olla.target_bler}, {"step_up_db", olla.step_up_db}, {"offset_db", olla.offset_db}}},
          {"n_slots", n_slots},
          {"seed", seed}};
}

SystemConfig SystemConfig::from_json(const nlohmann::json& doc) {
  SystemConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "budget") c.budget = LinkBudget::from_json(*it);
    else if (k == "mcs_table") c.table = McsTable::from_json(*it);
    else if (k == "olla") {
      c.olla.target_bler = it->value("target_bler", c.olla.target_bler);
      c.olla.step_up_db = it->value("step_up_db", c.olla.step_up_db);
      c.olla.offset_db = it->value("offset_db", c.olla.offset_db);
    } else if (k == "n_slots") c.n_slots = it->get<int>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "jobs") c.jobs = it->get<int>();
    else throw std::invalid_argument("unknown system-level key: " + k);
  }
  c.validate();
  return c;
}

SystemErrorReport compare_system_error(std::span<const double> true_pg_db, std::span<const double> model_pg_db,
                                       const SystemConfig& cfg) {
  cfg.validate();
  if (true_pg_db.size() != model_pg_db.size())
    throw std::invalid_argument("point count mismatch: " + std::to_string(true_pg_db.size()) + " true vs " +
                                std::to_string(model_pg_db.size()) + " model");
  SystemErrorReport r;
  r.points.resize(true_pg_db.size());
  parallel_for(true_pg_db.size(), cfg.jobs, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.seed, {i});
    Rng prng = make_rng(cfg.seed, {1, i});
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(prng);
    auto& p = r.points[i];
    p.truth = simulate_link({true_pg_db[i], 0.0, phase}, cfg.budget, cfg.table, cfg.olla, cfg.n_slots, seed);
    p.model = simulate_link({model_pg_db[i], 0.0, phase}, cfg.budget, cfg.table, cfg.olla, cfg.n_slots, seed);
    p.capacity_error_bps = std::abs(p.model.capacity_bps - p.truth.capacity_bps);
    p.capacity_error_relative = p.capacity_error_bps / p.truth.capacity_bps;
    p.efficiency_error = std::abs(p.model.spectral_efficiency - p.truth.spectral_efficiency);
    p.bler_error = std::abs(p.model.bler - p.truth.bler);
  });
  std::vector<double> cb, cr, ee, be;
  for (const auto& p : r.points) {
    cb.push_back(p.capacity_error_bps);
    cr.push_back(p.capacity_error_relative);
    ee.push_back(p.efficiency_error);
    be.push_back(p.bler_error);
  }
  r.capacity_error_bps = Ecdf(std::move(cb));
  r.capacity_error_relative = Ecdf(std::move(cr));
  r.efficiency_error = Ecdf(std::move(ee));
  r.bler_error = Ecdf(std::move(be));
  return r;
}

nlohmann::json SystemErrorReport::summary() const {
  auto med = [](const Ecdf& e) { return e.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.median()); };
  return {{"points", points.size()},
          {"median_error",
           {{"capacity_bps", med(capacity_error_bps)},
            {"capacity_relative", med(capacity_error_relative)},
            {"spectral_efficiency", med(efficiency_error)},
            {"bler", med(bler_error)}}}};
}

std::string SystemErrorReport::ecdf_csv() const {
  CsvWriter csv({"metric", "error", "cumulative_prob"});
  const std::pair<const char*, const Ecdf*> metrics[] = {{"capacity_bps", &capacity_error_bps},
                                                         {"capacity_relative", &capacity_error_relative},
                                                         {"spectral_efficiency", &efficiency_error},
                                                         {"bler", &bler_error}};
  for (const auto& [name, e] : metrics)
    for (const auto& row : e->table()) csv.add_row({name, format_double(row.value), format_double(row.cumulative_prob)});
  return csv.str();
}

}  // namespace radiomap
