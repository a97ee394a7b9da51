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

#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"

namespace {

using namespace radiomap::cli;

int fail(int code, std::string_view kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elevation-driven radio map pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool verbose = false;

  const char* names[] = {"sweep-rt", "gen-dataset", "train", "eval", "calibrate", "syslevel", "report"};
  const char* help[] = {"RMSE versus propagation depth and diffraction",
                        "Generate the augmented dataset and manifest",
                        "Train one model per configured fold rotation",
                        "Per-fold metrics, error ECDFs and sample rasters",
                        "Fine-tune on synthetic measurements over repeated trials",
                        "Capacity, link-adaptation efficiency and BLER comparison",
                        "Render figures from the CSV and raster outputs"};
  for (std::size_t k = 0; k < std::size(names); ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config_path, "Run config JSON");
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Master seed override");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose,-v", verbose, "Progress messages on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(1, "validation", e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::ostream* log = verbose ? &std::cerr : nullptr;
    if (command == "report") {
      if (out_dir.empty() && !config_path.empty()) out_dir = load_run_config(config_path).output_dir.string();
      if (out_dir.empty()) out_dir = "out";
      const auto written = cmd_report(out_dir, log);
      std::cout << written.size() << " figures in " << (std::filesystem::path(out_dir) / "figures").string() << "\n";
      return 0;
    }

    RunConfig cfg = config_path.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const Context ctx{with_jobs(cfg, jobs), log};
    std::filesystem::create_directories(ctx.config.output_dir);

    if (command == "sweep-rt") std::cout << cmd_sweep_rt(ctx).string() << "\n";
    else if (command == "gen-dataset") std::cout << cmd_gen_dataset(ctx).string() << "\n";
    else if (command == "train")
      for (const auto& p : cmd_train(ctx)) std::cout << p.string() << "\n";
    else if (command == "eval") std::cout << cmd_eval(ctx).string() << "\n";
    else if (command == "calibrate") std::cout << cmd_calibrate(ctx).string() << "\n";
    else if (command == "syslevel") std::cout << cmd_syslevel(ctx).string() << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    return fail(1, "validation", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(1, "validation", e.what());
  } catch (const std::exception& e) {
    return fail(2, "runtime", e.what());
  }
}
