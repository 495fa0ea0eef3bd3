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

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "satmimo/engine.hpp"
#include "satmimo/scenario.hpp"

namespace satmimo {

/// Carries every problem found while reading or validating a scenario.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses YAML scenario text. Throws ScenarioError listing all problems.
Scenario parse_scenario_text(const std::string& text);

/// Reads a scenario file, or a bundled preset when `name` matches one.
Scenario parse_scenario(const std::string& path_or_preset);

/// Semantic checks; an empty result means valid.
std::vector<std::string> validate_scenario(const Scenario& s);

/// Mode-specific checks (K <= N for MIMO) on top of validate_scenario.
std::vector<std::string> validate_for_mode(const Scenario& s, Mode mode);

/// Canonical YAML form; parse_scenario_text(emit_scenario(s)) == s.
std::string emit_scenario(const Scenario& s);

/// Canonical JSON (sorted keys, fixed float formatting) as text.
std::string canonical_json(const Scenario& s);

/// FNV-1a 64 of canonical_json, as 16 hex digits.
std::string config_hash(const Scenario& s);

std::vector<std::string> preset_names();
std::optional<std::string> preset_text(const std::string& name);

}  // namespace satmimo
