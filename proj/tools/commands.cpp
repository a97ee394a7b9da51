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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "plot.hpp"
#include "radiomap/io.hpp"
#include "radiomap/parallel.hpp"
#include "radiomap/random.hpp"

namespace radiomap::cli {
namespace fs = std::filesystem;
namespace {

void note(const Context& ctx, const std::string& msg) {
  if (ctx.log) *ctx.log << msg << std::endl;
}

nlohmann::json stamp(const Context& ctx, std::string_view command) {
  return {{"command", command}, {"config_hash", ctx.config.hash()}, {"master_seed", ctx.config.master_seed}};
}

DatasetManifest require_manifest(const Context& ctx) {
  const auto path = ctx.layout().manifest();
  if (!fs::exists(path)) throw std::runtime_error("no dataset at " + path.string() + "; run gen-dataset first");
  auto m = load_manifest(path);
  if (m.master_seed != ctx.config.master_seed)
    throw std::runtime_error("dataset at " + path.string() + " was generated with master_seed " +
                             std::to_string(m.master_seed) + ", config has " + std::to_string(ctx.config.master_seed) +
                             "; rerun gen-dataset");
  return m;
}

/// Hash of the sections a trained model depends on.
std::string training_hash(const RunConfig& cfg) {
  const auto doc = cfg.to_json();
  return hash_json({{"master_seed", doc.at("master_seed")},
                    {"scene", doc.at("scene")},
                    {"dataset", doc.at("dataset")},
                    {"network", doc.at("network")},
                    {"train", doc.at("train")}});
}

Weights require_model(const Context& ctx, int rotation) {
  const auto stem = ctx.layout().model(rotation);
  if (!fs::exists(fs::path(stem) += ".json"))
    throw std::runtime_error("no model at " + stem.string() + "; run train first");
  nlohmann::json meta;
  auto w = load_weights(stem, &meta);
  if (meta.value("training_hash", std::string()) != training_hash(ctx.config))
    throw std::runtime_error("model at " + stem.string() + " was trained under a different config; rerun train");
  return w;
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"median_error_percent", m.median_error_percent}, {"rmse_db", m.rmse_db}, {"cells", m.cells}};
}

std::string ecdf_table_csv(const Ecdf& e, const std::string& column) {
  CsvWriter csv({column, "cumulative_prob"});
  for (const auto& row : e.table()) csv.add_row({format_double(row.value), format_double(row.cumulative_prob)});
  return csv.str();
}

}  // namespace

RunConfig with_jobs(RunConfig cfg, int jobs) {
  if (jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
  cfg.jobs = jobs;
  cfg.dataset.propagation.jobs = jobs;
  cfg.train.jobs = jobs;
  cfg.calibration.config.jobs = jobs;
  cfg.syslevel.jobs = jobs;
  return cfg;
}

std::vector<ElevationGrid> source_scenes(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.scenes.empty()) return make_cities(cfg.dataset, seed);
  std::vector<ElevationGrid> grids;
  for (const auto& s : cfg.scenes) grids.push_back(load_grid(s));
  return grids;
}

// ---------------------------------------------------------------------------

std::vector<SweepScene> sweep_scenes(const RunConfig& cfg) {
  const std::uint64_t seed = stream_seed(cfg, Stream::sweep);
  const auto cities = source_scenes(cfg, seed);
  DatasetConfig dc = cfg.dataset;
  dc.n_tx_per_scene = (cfg.sweep.n_scenes + static_cast<int>(cities.size()) - 1) / static_cast<int>(cities.size());
  const auto bases = draw_base_scenarios(dc, cities, seed);
  if (bases.size() < static_cast<std::size_t>(cfg.sweep.n_scenes))
    throw std::runtime_error("only " + std::to_string(bases.size()) + " sweep scenes could be drawn");
  std::vector<SweepScene> scenes;
  for (int i = 0; i < cfg.sweep.n_scenes; ++i) {
    const auto& b = bases[static_cast<std::size_t>(i)];
    auto window = resample_window(cities[static_cast<std::size_t>(b.scene_id)], b.tx, b.extent_m, cfg.sweep.image_px);
    const auto tx = window_tx(window, b.tx);
    scenes.push_back({std::move(window), tx});
  }
  return scenes;
}

fs::path cmd_sweep_rt(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto out = ctx.layout();
  const auto scenes = sweep_scenes(cfg);
  note(ctx, "sweep: " + std::to_string(scenes.size()) + " scenes x " + std::to_string(cfg.sweep.depths.size()) +
                " depths x diffraction on/off");
  const auto report = fidelity_sweep(scenes, cfg.sweep.depths, cfg.dataset.propagation);

  fs::create_directories(out.timing());
  write_file_atomic(out.root / "sweep.csv", sweep_csv(report));
  write_file_atomic(out.timing() / "sweep_timing.csv", sweep_timing_csv(report));

  const int sweet = report.sweet_spot_depth(cfg.sweep.sweet_spot_fraction);
  auto summary = stamp(ctx, "sweep-rt");
  summary["n_scenes"] = scenes.size();
  summary["baseline"] = {{"depth", report.baseline_depth}, {"diffraction", true}};
  summary["sweet_spot"] = {{"depth", sweet}, {"diffraction", true}, {"fraction", cfg.sweep.sweet_spot_fraction}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"depth", r.depth}, {"diffraction", r.diffraction}, {"rmse_mean_db", r.rmse_mean}});
  summary["rows"] = rows;
  summary["text"] = "RMSE against depth " + std::to_string(report.baseline_depth) +
                    " + diffraction levels off at depth " + std::to_string(sweet) + " with diffraction enabled (" +
                    format_double(report.row(sweet, true).rmse_mean) + " dB mean RMSE over " +
                    std::to_string(scenes.size()) + " scenes)";
  write_json(out.root / "sweep_summary.json", summary);
  note(ctx, summary["text"].get<std::string>());
  return out.root / "sweep.csv";
}

fs::path cmd_gen_dataset(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto out = ctx.layout();
  note(ctx, "gen-dataset: writing " + out.dataset().string());
  const DatasetManifest m =
      cfg.scenes.empty()
          ? generate_dataset(cfg.dataset, out.dataset(), cfg.master_seed, cfg.jobs)
          : generate_dataset(cfg.dataset, source_scenes(cfg, cfg.master_seed), out.dataset(), cfg.master_seed, cfg.jobs);
  auto summary = stamp(ctx, "gen-dataset");
  summary["manifest"] = "dataset/manifest.json";
  summary["dataset_config_hash"] = m.config_hash;
  summary["bases"] = m.base_indices().size();
  summary["samples"] = m.samples.size();
  summary["skipped"] = m.skipped.size();
  write_json(out.root / "dataset_summary.json", summary);
  note(ctx, std::to_string(m.samples.size()) + " samples from " + std::to_string(m.base_indices().size()) + " bases, " +
                std::to_string(m.skipped.size()) + " skipped");
  return out.manifest();
}

std::vector<fs::path> cmd_train(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto out = ctx.layout();
  const auto manifest = require_manifest(ctx);
  fs::create_directories(out.models());
  fs::create_directories(out.timing());
  std::vector<fs::path> stems;
  nlohmann::json timing = nlohmann::json::object();
  for (int r : cfg.rotations) {
    TrainConfig tc = cfg.train;
    tc.seed = stream_seed(cfg, Stream::train, {static_cast<std::uint64_t>(r)});
    note(ctx, "train: rotation " + std::to_string(r));
    const auto res = train(out.dataset(), manifest, r, cfg.network, tc);
    nlohmann::json meta = {{"config_hash", cfg.hash()},
                           {"training_hash", training_hash(cfg)},
                           {"rotation", r},
                           {"best_epoch", res.best_epoch},
                           {"initial_train_loss", res.initial_train_loss}};
    save_weights(out.model(r), res.weights, meta);
    write_history_csv(out.root / ("history_rot" + std::to_string(r) + ".csv"), res.history);
    timing["rot" + std::to_string(r)] = {{"seconds", res.seconds}};
    stems.push_back(out.model(r));
    note(ctx, "  best epoch " + std::to_string(res.best_epoch) + ", " + format_double(res.seconds) + " s");
  }
  write_json(out.timing() / "train_timing.json", timing);
  return stems;
}

fs::path cmd_eval(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto out = ctx.layout();
  const auto manifest = require_manifest(ctx);
  const auto folds = manifest_folds(manifest);
  auto metrics = stamp(ctx, "eval");
  nlohmann::json per_fold = nlohmann::json::array();
  double median_sum = 0.0;
  bool all_below = true;
  for (int r : cfg.rotations) {
    const auto w = require_model(ctx, r);
    const auto tr = evaluate(w, out.dataset(), manifest, r, Split::train, cfg.jobs);
    const auto te = evaluate(w, out.dataset(), manifest, r, Split::test, cfg.jobs);
    const bool below = tr.median_error_percent <= te.median_error_percent;
    all_below = all_below && below;
    median_sum += te.median_error_percent;
    per_fold.push_back(
        {{"rotation", r}, {"train", metrics_json(tr)}, {"test", metrics_json(te)}, {"train_le_test", below}});
    write_file_atomic(out.root / ("ecdf_test_rot" + std::to_string(r) + ".csv"),
                      ecdf_table_csv(te.error_percent, "error_percent"));
    note(ctx, "eval: rotation " + std::to_string(r) + " test median " + format_double(te.median_error_percent) + "%");
  }
  metrics["folds"] = per_fold;
  metrics["median_error_percent"] = median_sum / static_cast<double>(cfg.rotations.size());
  metrics["train_le_test_all_folds"] = all_below;

  // Sample artifacts for the report: identity-transform test scenarios of
  // the first rotation.
  const int r0 = cfg.rotations.front();
  const auto w = require_model(ctx, r0);
  const auto test_bases = folds.bases_in(Split::test, r0);
  const std::set<int> test_set(test_bases.begin(), test_bases.end());
  fs::create_directories(out.samples());
  CsvWriter scatter({"sample_id", "distance_m", "truth_db", "predicted_db"});
  nlohmann::json sample_ids = nlohmann::json::array();
  double infer_seconds = 0.0;
  int shown = 0;
  for (const auto& rec : manifest.samples) {
    if (shown == 3) break;
    if (rec.transform != GeometricTransform::identity || !test_set.count(rec.base_index)) continue;
    const auto s = load_sample(out.dataset(), rec);
    const auto pred = predict_radio_map(w, s.input);
    infer_seconds += pred.seconds;
    RadioMap truth = pred.map;
    for (std::size_t k = 0; k < s.target.size(); ++k)
      truth.gains_db[k] = static_cast<float>(denormalize_gain(s.target[k]));
    save_radio_map(out.samples() / (rec.id + ".prediction"), pred.map);
    save_radio_map(out.samples() / (rec.id + ".truth"), truth);
    Raster elev;
    elev.header.width_px = elev.header.height_px = s.input.size_px;
    elev.header.resolution_m = s.input.resolution_m;
    elev.values = s.input.values;
    save_raster(out.samples() / (rec.id + ".elevation"), elev);

    const int n = s.input.size_px;
    const double c = (center_index(n) + 0.5) * s.input.resolution_m;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * n + i;
        if (!s.mask[k]) continue;
        const double dx = (i + 0.5) * s.input.resolution_m - c, dy = (j + 0.5) * s.input.resolution_m - c;
        scatter.add_row({rec.id, format_double(std::hypot(dx, dy)), format_double(truth.gains_db[k]),
                         format_double(pred.map.gains_db[k])});
      }
    sample_ids.push_back(rec.id);
    ++shown;
  }
  scatter.save(out.root / "pg_distance.csv");
  metrics["samples"] = sample_ids;
  write_json(out.root / "metrics.json", metrics);
  fs::create_directories(out.timing());
  write_json(out.timing() / "eval_timing.json",
             {{"inference_seconds_mean", shown ? infer_seconds / shown : 0.0}, {"samples", shown}});
  return out.root / "metrics.json";
}

fs::path cmd_calibrate(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto out = ctx.layout();
  const auto manifest = require_manifest(ctx);
  const int r0 = cfg.rotations.front();
  const auto model = require_model(ctx, r0);
  const auto cities = source_scenes(cfg, cfg.master_seed);
  const auto bases = draw_base_scenarios(cfg.dataset, cities, cfg.master_seed);
  const auto test = manifest_folds(manifest).bases_in(Split::test, r0);
  if (test.size() < static_cast<std::size_t>(cfg.calibration.n_scenes))
    throw std::runtime_error("calibration needs " + std::to_string(cfg.calibration.n_scenes) +
                             " test scenarios, rotation has " + std::to_string(test.size()));

  std::vector<CalibrationScene> scenes(static_cast<std::size_t>(cfg.calibration.n_scenes));
  PropagationConfig pc = cfg.dataset.propagation;
  pc.jobs = 1;
  note(ctx, "calibrate: building " + std::to_string(scenes.size()) + " scenes");
  parallel_for(scenes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& b = bases.at(static_cast<std::size_t>(test[i]));
    const auto window = resample_window(cities[static_cast<std::size_t>(b.scene_id)], b.tx, b.extent_m, cfg.dataset.out_px);
    scenes[i] = make_calibration_scene(window, window_tx(window, b.tx), pc, cfg.calibration.perturbation,
                                       cfg.calibration.config.route_points,
                                       stream_seed(cfg, Stream::calibration_scene, {i}), test[i]);
  });
  fs::create_directories(out.measurements());
  for (const auto& s : scenes)
    save_measurements(out.measurements() / ("scene" + std::to_string(s.scene_id)), s.reality.measurements);

  CalibrationConfig cc = cfg.calibration.config;
  cc.seed = stream_seed(cfg, Stream::calibration);
  note(ctx, "calibrate: " + std::to_string(cc.trials) + " trials");
  const auto report = calibration_trials(scenes, model, cc);
  if (report.points.empty())
    throw std::runtime_error("every calibration task failed: " + (report.failures.empty() ? std::string("no points") : report.failures.front()));

  write_file_atomic(out.root / "calibration_ecdf.csv", report.ecdf_csv());
  write_file_atomic(out.root / "calibration_points.csv", report.points_csv());
  auto summary = stamp(ctx, "calibrate");
  summary["report"] = report.summary();
  summary["scenes"] = scenes.size();
  summary["calibrated_below_uncalibrated"] = report.calibrated.median() < report.uncalibrated.median();
  summary["calibrated_below_oracle"] = report.calibrated.median() < report.oracle.median();
  write_json(out.root / "calibration_summary.json", summary);
  note(ctx, "medians (error %): oracle " + format_double(report.oracle.median()) + ", uncalibrated " +
                format_double(report.uncalibrated.median()) + ", calibrated " + format_double(report.calibrated.median()));
  return out.root / "calibration_summary.json";
}

fs::path cmd_syslevel(const Context& ctx) {
  const auto& cfg = ctx.config;
  const auto out = ctx.layout();
  const auto path = out.root / "calibration_points.csv";
  if (!fs::exists(path)) throw std::runtime_error("no " + path.string() + "; run calibrate first");
  const auto table = read_csv(path);
  const char* predictors[] = {"oracle_db", "uncalibrated_db", "calibrated_db"};
  std::map<std::string, std::vector<double>> cols;
  for (const char* name : {"measured_db", "oracle_db", "uncalibrated_db", "calibrated_db"}) {
    const int c = table.column(name);
    if (c < 0) throw std::runtime_error(path.string() + " lacks column " + name);
    for (const auto& row : table.rows) cols[name].push_back(std::stod(row.at(static_cast<std::size_t>(c))));
  }
  SystemConfig sc = cfg.syslevel;
  sc.seed = stream_seed(cfg, Stream::syslevel);
  const auto& truth = cols["measured_db"];

  auto summary = stamp(ctx, "syslevel");
  summary["points"] = truth.size();
  const auto control = compare_system_error(truth, truth, sc);
  summary["control"] = control.summary();
  summary["control_all_zero"] = control.capacity_error_bps.degenerate_at_zero() &&
                                control.efficiency_error.degenerate_at_zero() && control.bler_error.degenerate_at_zero();
  std::map<std::string, SystemErrorReport> reports;
  for (const char* p : predictors) {
    const std::string name = std::string(p).substr(0, std::string(p).size() - 3);
    note(ctx, "syslevel: " + name);
    reports[name] = compare_system_error(truth, cols[p], sc);
    write_file_atomic(out.root / ("syslevel_" + name + ".csv"), reports[name].ecdf_csv());
    summary[name] = reports[name].summary();
  }
  const auto& cal = reports["calibrated"];
  const auto& unc = reports["uncalibrated"];
  summary["calibrated_below_uncalibrated"] = {
      {"capacity_relative", cal.capacity_error_relative.median() < unc.capacity_error_relative.median()},
      {"spectral_efficiency", cal.efficiency_error.median() < unc.efficiency_error.median()},
      {"bler", cal.bler_error.median() < unc.bler_error.median()}};
  write_json(out.root / "syslevel_summary.json", summary);
  return out.root / "syslevel_summary.json";
}

// ---------------------------------------------------------------------------
// Report

namespace {

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> text;
  std::vector<std::vector<double>> num;  // per column, NaN when not numeric
  std::vector<bool> numeric;
};

NumericTable numeric_table(const CsvTable& t) {
  NumericTable n;
  n.header = t.header;
  n.numeric.assign(t.header.size(), true);
  n.num.assign(t.header.size(), {});
  n.text.assign(t.header.size(), {});
  for (const auto& row : t.rows)
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const std::string cell = c < row.size() ? row[c] : "";
      n.text[c].push_back(cell);
      double v = std::nan("");
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) v = std::nan("");
      } catch (const std::exception&) {
      }
      if (std::isnan(v) && cell != "nan") n.numeric[c] = false;
      n.num[c].push_back(v);
    }
  return n;
}

int col(const NumericTable& t, std::string_view name) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == name) return static_cast<int>(c);
  return -1;
}

std::vector<PlotSpec> plots_for(const NumericTable& t, const std::string& title) {
  std::vector<PlotSpec> panels;
  const int cum = col(t, "cumulative_prob");
  if (cum >= 0) {
    int group = -1, value = -1;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (static_cast<int>(c) == cum) continue;
      if (!t.numeric[c] && group < 0) group = static_cast<int>(c);
      if (t.numeric[c] && value < 0) value = static_cast<int>(c);
    }
    if (value < 0) throw std::runtime_error("ECDF table without a value column");
    std::vector<std::string> order;
    std::map<std::string, Series> by;
    for (std::size_t r = 0; r < t.num[static_cast<std::size_t>(cum)].size(); ++r) {
      const std::string g = group >= 0 ? t.text[static_cast<std::size_t>(group)][r] : "";
      if (!by.count(g)) order.push_back(g), by[g].label = g, by[g].step = true;
      by[g].x.push_back(t.num[static_cast<std::size_t>(value)][r]);
      by[g].y.push_back(t.num[static_cast<std::size_t>(cum)][r]);
    }
    const bool separate = group >= 0 && t.header[static_cast<std::size_t>(group)] == "metric";
    if (separate) {
      for (const auto& g : order) panels.push_back({g, t.header[static_cast<std::size_t>(value)], "CDF", {by[g]}});
    } else {
      PlotSpec p{title, t.header[static_cast<std::size_t>(value)], "CDF", {}};
      for (const auto& g : order) p.series.push_back(by[g]);
      panels.push_back(std::move(p));
    }
    return panels;
  }

  const int depth = col(t, "depth"), diff = col(t, "diffraction");
  if (depth >= 0 && diff >= 0) {
    int y = -1;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c].find("mean") != std::string::npos) {
        y = static_cast<int>(c);
        break;
      }
    if (y < 0) throw std::runtime_error("sweep table without a mean column");
    PlotSpec p{title, "path depth", t.header[static_cast<std::size_t>(y)], {}};
    for (int on : {0, 1}) {
      Series s{on ? "diffraction on" : "diffraction off", {}, {}};
      for (std::size_t r = 0; r < t.num[static_cast<std::size_t>(depth)].size(); ++r)
        if (static_cast<int>(t.num[static_cast<std::size_t>(diff)][r]) == on) {
          s.x.push_back(t.num[static_cast<std::size_t>(depth)][r]);
          s.y.push_back(t.num[static_cast<std::size_t>(y)][r]);
        }
      p.series.push_back(std::move(s));
    }
    panels.push_back(std::move(p));
    return panels;
  }

  const int x_col = [&] {
    for (const char* name : {"epoch", "measured_db", "distance_m", "x_m"})
      if (int c = col(t, name); c >= 0) return c;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.numeric[c]) return static_cast<int>(c);
    return -1;
  }();
  if (x_col < 0) throw std::runtime_error("no numeric column to plot");
  const auto& xs = t.num[static_cast<std::size_t>(x_col)];
  const bool sorted = std::is_sorted(xs.begin(), xs.end());
  std::set<std::string> skip = {t.header[static_cast<std::size_t>(x_col)], "trial", "scene_id", "lr"};
  if (t.header[static_cast<std::size_t>(x_col)] == "measured_db") skip.insert({"x_m", "y_m"});
  if (t.header[static_cast<std::size_t>(x_col)] == "x_m") skip.insert("path_gain_db");
  PlotSpec p{title, t.header[static_cast<std::size_t>(x_col)], "", {}};
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (!t.numeric[c] || skip.count(t.header[c])) continue;
    p.series.push_back({t.header[c], xs, t.num[c], sorted});
  }
  if (p.series.empty()) throw std::runtime_error("no numeric series to plot");
  if (p.series.size() == 1) p.y_label = p.series.front().label;
  panels.push_back(std::move(p));
  return panels;
}

}  // namespace

std::vector<fs::path> cmd_report(const fs::path& output_dir, std::ostream* log) {
  if (!fs::is_directory(output_dir)) throw std::invalid_argument("not a directory: " + output_dir.string());
  const fs::path figures = output_dir / "figures";
  std::vector<fs::path> csvs, truths;
  for (const auto& e : fs::recursive_directory_iterator(output_dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), output_dir);
    if (*rel.begin() == "figures" || *rel.begin() == "dataset") continue;
    if (e.path().extension() == ".csv") csvs.push_back(e.path());
    const auto name = e.path().filename().string();
    if (name.size() > 11 && name.ends_with(".truth.json")) truths.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::sort(truths.begin(), truths.end());

  std::vector<fs::path> written;
  for (const auto& csv : csvs) {
    auto rel = fs::relative(csv, output_dir);
    const auto png = (figures / rel).replace_extension(".png");
    const auto panels = plots_for(numeric_table(read_csv(csv)), rel.stem().string());
    render_plots(png, panels);
    written.push_back(png);
    if (log) *log << "report: " << png.string() << std::endl;
  }
  for (const auto& t : truths) {
    const std::string id = t.filename().string().substr(0, t.filename().string().size() - 11);
    const auto dir = t.parent_path();
    const auto truth = load_radio_map(dir / (id + ".truth"));
    const auto pred = load_radio_map(dir / (id + ".prediction"));
    const auto elev = load_raster(dir / (id + ".elevation"));
    const Heatmap panels[] = {
        {"elevation", elev.header.width_px, elev.header.height_px, elev.values, true},
        {"prediction", pred.width_px, pred.height_px, pred.gains_db, false},
        {"ground truth", truth.width_px, truth.height_px, truth.gains_db, false}};
    const auto png = figures / "samples" / (id + "_triptych.png");
    render_heatmaps(png, panels, kGainFloorDb, kGainCeilDb, "gain dB");
    written.push_back(png);
    if (log) *log << "report: " << png.string() << std::endl;
  }
  return written;
}

}  // namespace radiomap::cli
