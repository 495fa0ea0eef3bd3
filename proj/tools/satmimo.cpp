// SPDX-License-Identifier: Apache-2.0
//
// satmimo - multi-satellite MU-MIMO downlink precoding simulator
// Copyright (C) 2026 The satmimo Authors
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

// satmimo command-line front end: run | validate | compare

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satmimo/config.hpp"
#include "satmimo/engine.hpp"
#include "satmimo/io.hpp"

namespace {

std::vector<satmimo::Mode> split_modes(const std::string& list) {
  std::vector<satmimo::Mode> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(satmimo::parse_mode(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-satellite MU-MIMO downlink precoding simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", satmimo::kToolVersion);

  std::string scenario;
  std::string modes = "siso,mimo";
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::string out_dir = "satmimo-out";
  bool force = false;

  auto* run = app.add_subcommand("run", "run one or more modes and write outputs");
  run->add_option("--scenario", scenario, "scenario file or preset name")->required();
  run->add_option("--mode", modes, "comma-separated: siso, mimo, uncoordinated");
  auto* seed_opt = run->add_option("--seed", seed, "master seed override");
  auto* dur_opt = run->add_option("--duration", duration, "measurement duration in s")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--force", force, "overwrite an existing output directory");

  std::string vmode;
  auto* validate = app.add_subcommand("validate", "check a scenario and list every problem");
  validate->add_option("--scenario", scenario, "scenario file or preset name")->required();
  validate->add_option("--mode", vmode, "also apply mode-specific checks");

  std::vector<std::string> files;
  std::string ref_mode = "siso", cand_mode = "mimo";
  auto* compare = app.add_subcommand("compare", "compare two reports from metrics.json files");
  compare->add_option("files", files, "metrics.json (reference) [metrics.json (candidate)]")
      ->required()
      ->expected(1, 2);
  compare->add_option("--reference", ref_mode, "reference mode");
  compare->add_option("--candidate", cand_mode, "candidate mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      satmimo::RunManifest m;
      m.scenario = scenario;
      m.modes = split_modes(modes);
      if (m.modes.empty()) throw std::invalid_argument("no mode given");
      if (*seed_opt) m.seed = seed;
      if (*dur_opt) m.duration_s = duration;
      m.out_dir = out_dir;
      return satmimo::run_command(m, force, std::cerr);
    }
    if (*validate) {
      try {
        const auto sc = satmimo::parse_scenario(scenario);
        if (!vmode.empty()) {
          std::vector<std::string> errs;
          for (auto md : split_modes(vmode)) {
            auto e = satmimo::validate_for_mode(sc, md);
            errs.insert(errs.end(), e.begin(), e.end());
          }
          if (!errs.empty()) throw satmimo::ScenarioError(errs);
        }
        std::cout << "ok: " << sc.name << " (config hash " << satmimo::config_hash(sc) << ")\n";
        return 0;
      } catch (const satmimo::ScenarioError& e) {
        std::cerr << e.what() << '\n';
        return 2;
      }
    }
    if (*compare) {
      const std::string cand_file = files.size() > 1 ? files[1] : files[0];
      return satmimo::compare_command(files[0], satmimo::parse_mode(ref_mode), cand_file,
                                      satmimo::parse_mode(cand_mode), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
