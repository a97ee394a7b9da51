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

#include "run_config.hpp"

#include <stdexcept>

#include "radiomap/io.hpp"
#include "radiomap/random.hpp"

namespace radiomap::cli {
namespace {

void strip_jobs(nlohmann::json& doc) {
  if (!doc.is_object()) return;
  doc.erase("jobs");
  for (auto& [k, v] : doc.items()) strip_jobs(v);
}

void reject_seed(const nlohmann::json& section, const std::string& name) {
  if (section.is_object() && section.contains("seed"))
    throw std::invalid_argument(name + ".seed is derived from master_seed and cannot be set");
}

nlohmann::json sweep_to_json(const SweepConfig& s) {
  return {{"n_scenes", s.n_scenes},
          {"depths", s.depths},
          {"image_px", s.image_px},
          {"sweet_spot_fraction", s.sweet_spot_fraction}};
}

SweepConfig sweep_from_json(const nlohmann::json& doc) {
  SweepConfig s;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "n_scenes") s.n_scenes = it->get<int>();
    else if (k == "depths") s.depths = it->get<std::vector<int>>();
    else if (k == "image_px") s.image_px = it->get<int>();
    else if (k == "sweet_spot_fraction") s.sweet_spot_fraction = it->get<double>();
    else throw std::invalid_argument("unknown sweep key: " + k);
  }
  return s;
}

/// A full spec, or only input_px / base_channels for the desk layout.
NetworkSpec network_from_json(const nlohmann::json& doc, int default_px) {
  if (!doc.is_object()) throw std::invalid_argument("network section must be an object");
  bool shorthand = true;
  for (auto it = doc.begin(); it != doc.end(); ++it) shorthand = shorthand && (it.key() == "input_px" || it.key() == "base_channels");
  if (!shorthand) return NetworkSpec::from_json(doc);
  const NetworkSpec d = NetworkSpec::desk();
  return NetworkSpec::desk(doc.value("input_px", default_px), doc.value("base_channels", d.base_channels));
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json scene_list = nlohmann::json::array();
  for (const auto& s : scenes) scene_list.push_back(s.generic_string());
  auto cal = calibration.config.to_json();
  cal["perturbation"] = calibration.perturbation.to_json();
  cal["n_scenes"] = calibration.n_scenes;
  nlohmann::json doc = {{"master_seed", master_seed},
                        {"scene", scene_list},
                        {"dataset", dataset.to_json()},
                        {"sweep", sweep_to_json(sweep)},
                        {"network", network.to_json()},
                        {"train", train.to_json()},
                        {"rotations", rotations},
                        {"calibration", cal},
                        {"syslevel", syslevel.to_json()}};
  strip_jobs(doc);
  return doc;
}

std::string RunConfig::hash() const { return hash_json(to_json()); }

void RunConfig::validate() const {
  dataset.validate();
  network.validate();
  train.validate();
  calibration.config.validate();
  calibration.perturbation.validate();
  syslevel.validate();
  if (network.input_px != dataset.out_px)
    throw std::invalid_argument("network.input_px (" + std::to_string(network.input_px) + ") must equal dataset.out_px (" +
                                std::to_string(dataset.out_px) + ")");
  if (sweep.n_scenes < 1) throw std::invalid_argument("sweep.n_scenes must be >= 1");
  if (sweep.depths.empty()) throw std::invalid_argument("sweep.depths is empty");
  if (sweep.image_px < 4) throw std::invalid_argument("sweep.image_px must be >= 4");
  if (!(sweep.sweet_spot_fraction > 0.0 && sweep.sweet_spot_fraction < 1.0))
    throw std::invalid_argument("sweep.sweet_spot_fraction must be in (0, 1)");
  if (rotations.empty()) throw std::invalid_argument("rotations is empty");
  for (int r : rotations)
    if (r < 0 || r >= dataset.folds)
      throw std::invalid_argument("rotation " + std::to_string(r) + " outside [0, " + std::to_string(dataset.folds) + ")");
  if (calibration.n_scenes < 1) throw std::invalid_argument("calibration.n_scenes must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

RunConfig parse_run_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("run config must be a JSON object");
  RunConfig c;
  if (doc.contains("scene") && doc.contains("city_params"))
    throw std::invalid_argument("scene and city_params are mutually exclusive");

  nlohmann::json dataset = doc.value("dataset", nlohmann::json::object());
  if (doc.contains("city_params")) {
    if (dataset.contains("city")) throw std::invalid_argument("city parameters given both in city_params and dataset.city");
    dataset["city"] = doc.at("city_params");
  }
  if (doc.contains("propagation")) {
    if (dataset.contains("propagation"))
      throw std::invalid_argument("propagation given both at top level and in dataset.propagation");
    dataset["propagation"] = doc.at("propagation");
  }

  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "master_seed") c.master_seed = it->get<std::uint64_t>();
    else if (k == "output_dir") c.output_dir = it->get<std::string>();
    else if (k == "scene") {
      if (it->is_string()) c.scenes.emplace_back(it->get<std::string>());
      else
        for (const auto& s : *it) c.scenes.emplace_back(s.get<std::string>());
      if (c.scenes.empty()) throw std::invalid_argument("scene list is empty");
    } else if (k == "city_params" || k == "propagation" || k == "dataset" || k == "network") {
      continue;
    } else if (k == "sweep") c.sweep = sweep_from_json(*it);
    else if (k == "train") {
      reject_seed(*it, "train");
      c.train = TrainConfig::from_json(*it);
    } else if (k == "rotations") c.rotations = it->get<std::vector<int>>();
    else if (k == "calibration") {
      reject_seed(*it, "calibration");
      auto cal = *it;
      if (cal.contains("perturbation")) {
        c.calibration.perturbation = Perturbation::from_json(cal.at("perturbation"));
        cal.erase("perturbation");
      }
      if (cal.contains("n_scenes")) {
        c.calibration.n_scenes = cal.at("n_scenes").get<int>();
        cal.erase("n_scenes");
      }
      c.calibration.config = CalibrationConfig::from_json(cal);
    } else if (k == "syslevel") {
      reject_seed(*it, "syslevel");
      c.syslevel = SystemConfig::from_json(*it);
    } else {
      throw std::invalid_argument("unknown run config key: " + k);
    }
  }
  c.dataset = DatasetConfig::from_json(dataset);
  c.network = network_from_json(doc.value("network", nlohmann::json::object()), c.dataset.out_px);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw std::invalid_argument("config file not found: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

std::uint64_t stream_seed(const RunConfig& cfg, Stream s, std::initializer_list<std::uint64_t> path) {
  return derive_seed(derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(s)}), path);
}

}  // namespace radiomap::cli
