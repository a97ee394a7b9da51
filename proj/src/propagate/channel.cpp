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
#include <limits>
#include <stdexcept>

#include "radiomap/propagate.hpp"

namespace radiomap {

std::string to_string(PathKind k) {
  switch (k) {
    case PathKind::los: return "los";
    case PathKind::reflected: return "reflected";
    case PathKind::diffracted: return "diffracted";
  }
  throw std::logic_error("unknown path kind");
}

double path_gain_db_unclamped(const ChannelImpulseResponse& cir) {
  double power = 0.0;
  for (const auto& c : cir.components) power += std::norm(c.amplitude);
  if (power <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(power);
}

double clamp_gain_db(double db) {
  if (std::isnan(db)) return kGainFloorDb;
  return std::clamp(db, kGainFloorDb, kGainCeilDb);
}

double path_gain_from_cir(const ChannelImpulseResponse& cir) { return clamp_gain_db(path_gain_db_unclamped(cir)); }

double knife_edge_loss_db(double nu) {
  if (!(nu > -0.78)) return 0.0;
  const double a = nu - 0.1;
  return 6.9 + 20.0 * std::log10(std::sqrt(a * a + 1.0) + a);
}

double fresnel_parameter(double clearance_m, double d1_m, double d2_m, double wavelength_m) {
  return clearance_m * std::sqrt(2.0 * (d1_m + d2_m) / (wavelength_m * d1_m * d2_m));
}

// ---------------------------------------------------------------------------

void PropagationConfig::validate() const {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) throw std::invalid_argument("frequency must be positive");
  if (max_depth < 0 || max_depth > kMaxPathDepth)
    throw std::invalid_argument("max_depth must lie in [0, " + std::to_string(kMaxPathDepth) + "]");
  if (!(material.reflection_coeff > 0.0 && material.reflection_coeff < 1.0))
    throw std::invalid_argument("reflection coefficient must lie in (0, 1)");
  if (!(rx_height_m >= 0.0)) throw std::invalid_argument("rx height must be non-negative");
  if (!std::isfinite(tx_power_dbm)) throw std::invalid_argument("tx power must be finite");
  if (rays_per_octant < 1) throw std::invalid_argument("rays_per_octant must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

nlohmann::json PropagationConfig::to_json() const {
  return {{"frequency_hz", frequency_hz},
          {"max_depth", max_depth},
          {"diffraction_enabled", diffraction_enabled},
          {"material", {{"name", material.name}, {"reflection_coeff", material.reflection_coeff}}},
          {"tx_power_dbm", tx_power_dbm},
          {"rx_height_m", rx_height_m},
          {"rays_per_octant", rays_per_octant}};
}

PropagationConfig PropagationConfig::from_json(const nlohmann::json& doc) {
  PropagationConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& k = it.key();
    if (k == "frequency_hz") c.frequency_hz = it->get<double>();
    else if (k == "max_depth") c.max_depth = it->get<int>();
    else if (k == "diffraction_enabled") c.diffraction_enabled = it->get<bool>();
    else if (k == "tx_power_dbm") c.tx_power_dbm = it->get<double>();
    else if (k == "rx_height_m") c.rx_height_m = it->get<double>();
    else if (k == "rays_per_octant") c.rays_per_octant = it->get<int>();
    else if (k == "material") {
      if (it->is_string()) {
        const auto name = it->get<std::string>();
        if (name == "concrete") c.material = Material::concrete();
        else if (name == "brick") c.material = Material::brick();
        else throw std::invalid_argument("unknown material: " + name);
      } else {
        Material m;
        for (auto mt = it->begin(); mt != it->end(); ++mt) {
          if (mt.key() == "name") m.name = mt->get<std::string>();
          else if (mt.key() == "reflection_coeff") m.reflection_coeff = mt->get<double>();
          else throw std::invalid_argument("unknown material key: " + mt.key());
        }
        c.material = m;
      }
    } else {
      throw std::invalid_argument("unknown propagation key: " + k);
    }
  }
  c.validate();
  return c;
}

}  // namespace radiomap
