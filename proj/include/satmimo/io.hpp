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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "satmimo/channel.hpp"
#include "satmimo/csi.hpp"
#include "satmimo/engine.hpp"
#include "satmimo/precoder.hpp"
#include "satmimo/sync.hpp"

namespace satmimo {

inline constexpr const char* kToolVersion = "0.3.0";

nlohmann::json to_json(const ChannelMatrix& h);
ChannelMatrix channel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PrecodingMatrix& p);
nlohmann::json to_json(const CsiSnapshot& s, std::optional<double> delivery_time_s = {});
nlohmann::json to_json(const ResidualPhaseStats& s);  // summary, no samples
nlohmann::json to_json(const MetricsReport& r);       // summary, no series
nlohmann::json to_json(const ComparisonSummary& c);

/// Delivery records as written to csi/<mode>_snapshots.json.
std::vector<CsiDelivery> replay_from_json(const nlohmann::json& j);
std::vector<CsiDelivery> load_replay(const std::filesystem::path& path);

struct RunManifest {
  std::string scenario;  // path or preset name
  std::vector<Mode> modes;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_s;
  std::filesystem::path out_dir;
  std::string tool_version = kToolVersion;
  std::string config_hash;  // filled in by run_command
};

/// Parses the scenario, runs every mode, and writes metrics.json plus the CSV
/// series. Refuses a non-empty output directory unless force is set.
/// Returns 0 on success, 2 on scenario errors, 3 on simulation abort,
/// 4 on output errors.
int run_command(RunManifest manifest, bool force, std::ostream& log);

/// Rebuilds the summary fields of a report (no series) from to_json output.
MetricsReport report_from_json(const nlohmann::json& j);

/// Compares the `candidate_mode` report of one metrics.json against the
/// `reference_mode` report of another (they may be the same file) and prints
/// the summary as JSON. Returns nonzero on mismatch or missing reports.
int compare_command(const std::filesystem::path& reference, Mode reference_mode,
                    const std::filesystem::path& candidate, Mode candidate_mode, std::ostream& out);

}  // namespace satmimo
