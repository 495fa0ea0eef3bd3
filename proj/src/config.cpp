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

#include "satmimo/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "satmimo/waveform.hpp"

namespace satmimo {

namespace {

#include "presets.inc"

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid scenario:";
  for (const auto& e : errors) msg += "\n  - " + e;
  return msg;
}

// Collects type and presence problems while walking the document.
class Reader {
 public:
  std::vector<std::string> errors;

  template <typename T>
  void get(const YAML::Node& node, const std::string& key, const std::string& path, T& out,
           bool required = false) {
    if (!node || !node.IsMap()) return;
    const YAML::Node v = node[key];
    if (!v) {
      if (required) errors.push_back(path + "." + key + ": missing required key");
      return;
    }
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      errors.push_back(path + "." + key + ": wrong type");
    }
  }

  void get_double(const YAML::Node& node, const std::string& key, const std::string& path,
                  double& out, bool required = false) {
    if (!node || !node.IsMap()) return;
    const YAML::Node v = node[key];
    if (!v) {
      if (required) errors.push_back(path + "." + key + ": missing required key");
      return;
    }
    if (!v.IsScalar()) {
      errors.push_back(path + "." + key + ": expected a number");
      return;
    }
    const std::string s = v.Scalar();
    if (s == "inf" || s == ".inf" || s == "+inf" || s == "+.inf") {
      out = std::numeric_limits<double>::infinity();
      return;
    }
    if (s == "-inf" || s == "-.inf") {
      out = -std::numeric_limits<double>::infinity();
      return;
    }
    try {
      std::size_t pos = 0;
      out = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      errors.push_back(path + "." + key + ": expected a number, got '" + s + "'");
    }
  }

  void get_doubles(const YAML::Node& node, const std::string& key, const std::string& path,
                   std::vector<double>& out, bool required = false) {
    if (!node || !node.IsMap()) return;
    const YAML::Node v = node[key];
    if (!v) {
      if (required) errors.push_back(path + "." + key + ": missing required key");
      return;
    }
    if (!v.IsSequence()) {
      errors.push_back(path + "." + key + ": expected a list of numbers");
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      YAML::Node wrap;
      wrap["x"] = v[i];
      double x = 0.0;
      get_double(wrap, "x", path + "." + key + "[" + std::to_string(i) + "]", x, true);
      out.push_back(x);
    }
  }

  void trajectory(const YAML::Node& n, const std::string& path, OscillatorTrajectory& t) {
    if (!n.IsMap()) {
      errors.push_back(path + ": expected a mapping");
      return;
    }
    get_double(n, "static_offset_hz", path, t.static_offset_hz);
    get_double(n, "drift_rate_hz_per_s", path, t.drift_rate_hz_per_s);
    get_double(n, "random_walk_hz2_per_s", path, t.random_walk_hz2_per_s);
    get_double(n, "linewidth_hz", path, t.linewidth_hz);
    get(n, "seed", path, t.seed);
    if (const auto steps = n["steps"]) {
      if (!steps.IsSequence()) {
        errors.push_back(path + ".steps: expected a list");
      } else {
        for (std::size_t i = 0; i < steps.size(); ++i) {
          FrequencyStep s;
          const std::string p = path + ".steps[" + std::to_string(i) + "]";
          get_double(steps[i], "time_s", p, s.time_s, true);
          get_double(steps[i], "delta_hz", p, s.delta_hz, true);
          t.steps.push_back(s);
        }
      }
    }
  }

  void trajectories(const YAML::Node& node, const std::string& key, const std::string& path,
                    std::vector<OscillatorTrajectory>& out) {
    const YAML::Node v = node[key];
    if (!v) return;
    if (!v.IsSequence()) {
      errors.push_back(path + "." + key + ": expected a list");
      return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      OscillatorTrajectory t;
      trajectory(v[i], path + "." + key + "[" + std::to_string(i) + "]", t);
      out.push_back(t);
    }
  }
};

bool is_multiple(double x, double step) {
  if (!(step > 0.0)) return false;
  const double q = x / step;
  return std::abs(q - std::round(q)) < 1e-6;
}

std::string fmt_double(double x) {
  if (std::isnan(x)) return ".nan";
  if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

nlohmann::json jnum(double x) {
  if (std::isfinite(x)) return x;
  return fmt_double(x);
}

nlohmann::json traj_json(const OscillatorTrajectory& t) {
  nlohmann::json j;
  j["static_offset_hz"] = jnum(t.static_offset_hz);
  j["drift_rate_hz_per_s"] = jnum(t.drift_rate_hz_per_s);
  j["random_walk_hz2_per_s"] = jnum(t.random_walk_hz2_per_s);
  j["linewidth_hz"] = jnum(t.linewidth_hz);
  j["seed"] = t.seed;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : t.steps) j["steps"].push_back({{"time_s", jnum(s.time_s)}, {"delta_hz", jnum(s.delta_hz)}});
  return j;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

Scenario parse_scenario_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError({std::string("YAML syntax error: ") + e.what()});
  }
  Reader rd;
  Scenario s;
  const char* sections[] = {"run", "carriers", "stations", "satellites", "impairments"};
  const bool is_map = root.IsMap();
  if (!root.IsNull() && !is_map) throw ScenarioError({"top level must be a mapping"});
  for (const char* sec : sections)
    if (!is_map || !root[sec]) rd.errors.push_back(std::string(sec) + ": missing required section");
  if (!is_map) throw ScenarioError(rd.errors);

  if (const auto run = root["run"]) {
    rd.get(run, "name", "run", s.name);
    rd.get_double(run, "duration_s", "run", s.duration_s, true);
    rd.get(run, "seed", "run", s.seed);
  }
  if (const auto c = root["carriers"]) {
    rd.get_doubles(c, "uplink_hz", "carriers", s.carriers.uplink_hz, true);
    rd.get_double(c, "downlink_hz", "carriers", s.carriers.downlink_hz, true);
    rd.get_doubles(c, "reference_tone_hz", "carriers", s.carriers.reference_tone_hz, true);
    rd.get_double(c, "symbol_rate", "carriers", s.carriers.symbol_rate, true);
    rd.get_double(c, "rolloff", "carriers", s.carriers.rolloff);
  }
  if (const auto st = root["stations"]) {
    if (!st.IsSequence()) {
      rd.errors.push_back("stations: expected a list");
    } else {
      for (std::size_t i = 0; i < st.size(); ++i) {
        const std::string p = "stations[" + std::to_string(i) + "]";
        GroundStation g;
        std::string role;
        rd.get(st[i], "id", p, g.id, true);
        rd.get(st[i], "role", p, role, true);
        if (role == "gateway") g.role = StationRole::gateway;
        else if (role == "user_terminal" || role == "user-terminal") g.role = StationRole::user_terminal;
        else if (!role.empty()) rd.errors.push_back(p + ".role: must be gateway or user_terminal");
        rd.get_double(st[i], "latitude_deg", p, g.position.latitude_deg, true);
        rd.get_double(st[i], "longitude_deg", p, g.position.longitude_deg, true);
        rd.get_double(st[i], "altitude_m", p, g.position.altitude_m);
        rd.get_double(st[i], "cnr_db", p, g.cnr_db, g.role == StationRole::user_terminal);
        g.noise_variance = g.role == StationRole::user_terminal ? db_to_linear(-g.cnr_db) : 1.0;
        s.stations.push_back(g);
      }
    }
  }
  if (const auto sats = root["satellites"]) {
    if (!sats.IsSequence()) {
      rd.errors.push_back("satellites: expected a list");
    } else {
      for (std::size_t i = 0; i < sats.size(); ++i) {
        const std::string p = "satellites[" + std::to_string(i) + "]";
        SatelliteMotion m;
        rd.get(sats[i], "id", p, m.id, true);
        rd.get_double(sats[i], "nominal_longitude_deg", p, m.nominal_longitude_deg, true);
        rd.get_double(sats[i], "mean_radius_m", p, m.mean_radius_m);
        rd.get_double(sats[i], "radial_amplitude_m", p, m.radial_amplitude_m);
        rd.get_double(sats[i], "oscillation_period_s", p, m.oscillation_period_s);
        rd.get_double(sats[i], "oscillation_phase_rad", p, m.oscillation_phase_rad);
        s.satellites.push_back(m);
      }
    }
  }
  if (const auto im = root["impairments"]) {
    rd.trajectories(im, "converters", "impairments", s.impairments.converters);
    rd.trajectories(im, "lnbs", "impairments", s.impairments.lnbs);
    if (const auto g = im["gateway"]) rd.trajectory(g, "impairments.gateway", s.impairments.gateway);
    rd.get_double(im, "tone_snr_db", "impairments", s.impairments.tone_snr_db);
  }
  if (const auto sy = root["sync"]) {
    auto& y = s.sync;
    rd.get_double(sy, "sample_rate_hz", "sync", y.sample_rate_hz);
    rd.get_double(sy, "loop_bandwidth_hz", "sync", y.loop_bandwidth_hz);
    rd.get_double(sy, "damping", "sync", y.damping);
    rd.get_double(sy, "fll_time_constant_s", "sync", y.fll_time_constant_s);
    rd.get_double(sy, "block_s", "sync", y.block_s);
    rd.get_double(sy, "rtt_s", "sync", y.rtt_s);
    rd.get_double(sy, "warmup_s", "sync", y.warmup_s);
    rd.get_doubles(sy, "nco_initial_offset_hz", "sync", y.nco_initial_offset_hz);
    rd.get_double(sy, "histogram_bin_deg", "sync", y.histogram_bin_deg);
    rd.get(sy, "residual_decimation", "sync", y.residual_decimation);
  }
  if (const auto cs = root["csi"]) {
    auto& c = s.csi;
    rd.get(cs, "pilot_length", "csi", c.pilot_length);
    rd.get_double(cs, "pilot_rate_hz", "csi", c.pilot_rate_hz);
    rd.get_double(cs, "update_period_s", "csi", c.update_period_s);
    rd.get(cs, "measurements_per_update", "csi", c.measurements_per_update);
    rd.get_double(cs, "feedback_latency_s", "csi", c.feedback_latency_s);
    rd.get_double(cs, "pilot_snr_offset_db", "csi", c.pilot_snr_offset_db);
    rd.get(cs, "perfect", "csi", c.perfect);
    rd.get(cs, "replay_path", "csi", c.replay_path);
  }
  if (const auto en = root["engine"]) {
    auto& e = s.engine;
    std::string model = e.symbol_model == SymbolModel::qpsk ? "qpsk" : "gaussian";
    rd.get_double(en, "metric_window_s", "engine", e.metric_window_s);
    rd.get_double(en, "metric_interval_s", "engine", e.metric_interval_s);
    rd.get(en, "symbol_model", "engine", model);
    if (model == "qpsk") e.symbol_model = SymbolModel::qpsk;
    else if (model == "gaussian") e.symbol_model = SymbolModel::gaussian;
    else rd.errors.push_back("engine.symbol_model: must be qpsk or gaussian");
    rd.get_double(en, "decode_threshold_db", "engine", e.decode_threshold_db);
    rd.get_double(en, "propagation_s", "engine", e.propagation_s);
    rd.get_double(en, "start_epoch_s", "engine", e.start_epoch_s);
    rd.get(en, "active_satellite", "engine", e.active_satellite);
    rd.get(en, "served_stream", "engine", e.served_stream);
    rd.get(en, "constellation_points", "engine", e.constellation_points);
  }
  // Missing oscillator lists mean ideal oscillators.
  if (s.impairments.converters.empty()) s.impairments.converters.resize(s.satellites.size());
  if (s.impairments.lnbs.empty()) s.impairments.lnbs.resize(s.num_user_terminals());

  auto semantic = validate_scenario(s);
  rd.errors.insert(rd.errors.end(), semantic.begin(), semantic.end());
  if (!rd.errors.empty()) throw ScenarioError(rd.errors);
  return s;
}

Scenario parse_scenario(const std::string& path_or_preset) {
  namespace fs = std::filesystem;
  if (fs::exists(path_or_preset)) {
    std::ifstream in(path_or_preset);
    if (!in) throw ScenarioError({"cannot read " + path_or_preset});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
  }
  if (auto txt = preset_text(path_or_preset)) return parse_scenario_text(*txt);
  throw ScenarioError({"scenario file or preset not found: " + path_or_preset});
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> e;
  auto req = [&](bool ok, const std::string& msg) {
    if (!ok) e.push_back(msg);
  };
  req(s.duration_s > 0.0, "run.duration_s: must be > 0");

  std::size_t gateways = 0, uts = 0;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.stations.size(); ++i) {
    const auto& g = s.stations[i];
    const std::string p = "stations[" + std::to_string(i) + "]";
    req(!g.id.empty(), p + ".id: must not be empty");
    req(ids.insert(g.id).second || g.id.empty(), p + ".id: duplicate id '" + g.id + "'");
    req(g.position.latitude_deg >= -90.0 && g.position.latitude_deg <= 90.0, p + ".latitude_deg: must be in [-90, 90]");
    req(g.position.longitude_deg >= -180.0 && g.position.longitude_deg <= 180.0, p + ".longitude_deg: must be in [-180, 180]");
    req(std::isfinite(g.position.altitude_m), p + ".altitude_m: must be finite");
    if (g.role == StationRole::gateway) ++gateways;
    else {
      ++uts;
      req(std::isfinite(g.cnr_db), p + ".cnr_db: must be finite");
      req(g.noise_variance > 0.0, p + ": noise variance must be > 0");
    }
  }
  req(gateways == 1, "stations: exactly one gateway required (found " + std::to_string(gateways) + ")");
  req(uts >= 1, "stations: at least one user terminal required");

  const std::size_t n = s.satellites.size();
  req(n >= 1, "satellites: at least one satellite required");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = s.satellites[i];
    const std::string p = "satellites[" + std::to_string(i) + "]";
    req(!m.id.empty(), p + ".id: must not be empty");
    req(m.mean_radius_m > kEarthRadius, p + ".mean_radius_m: must exceed the Earth radius");
    req(m.oscillation_period_s > 0.0, p + ".oscillation_period_s: must be > 0");
    req(m.radial_amplitude_m >= 0.0, p + ".radial_amplitude_m: must be >= 0");
    req(m.mean_radius_m - m.radial_amplitude_m > kEarthRadius, p + ": orbit dips below the surface");
  }

  const auto& c = s.carriers;
  req(c.uplink_hz.size() == n, "carriers.uplink_hz: one entry per satellite required");
  req(c.reference_tone_hz.size() == n, "carriers.reference_tone_hz: one entry per satellite required");
  for (double f : c.uplink_hz) req(f > 0.0, "carriers.uplink_hz: frequencies must be > 0");
  for (std::size_t i = 0; i < c.uplink_hz.size(); ++i)
    for (std::size_t j = i + 1; j < c.uplink_hz.size(); ++j)
      req(c.uplink_hz[i] != c.uplink_hz[j], "carriers.uplink_hz: uplink frequencies must be pairwise distinct");
  req(c.downlink_hz > 0.0, "carriers.downlink_hz: must be > 0");
  req(c.symbol_rate > 0.0, "carriers.symbol_rate: must be > 0");
  req(c.rolloff >= 0.0 && c.rolloff <= 1.0, "carriers.rolloff: must be in [0, 1]");

  const auto& y = s.sync;
  req(y.sample_rate_hz > 0.0, "sync.sample_rate_hz: must be > 0");
  req(y.loop_bandwidth_hz > 0.0 && y.loop_bandwidth_hz <= y.sample_rate_hz / 10.0,
      "sync.loop_bandwidth_hz: must be in (0, sample_rate/10]");
  req(y.damping > 0.0, "sync.damping: must be > 0");
  req(y.fll_time_constant_s >= 0.0, "sync.fll_time_constant_s: must be >= 0");
  const double blk = y.block_s;
  req(blk > 0.0 && is_multiple(blk * y.sample_rate_hz, 1.0), "sync.block_s: must be a positive whole number of samples");
  req(y.rtt_s >= 0.0 && is_multiple(y.rtt_s * y.sample_rate_hz, 1.0), "sync.rtt_s: must be a non-negative whole number of samples");
  req(y.warmup_s >= blk && is_multiple(y.warmup_s, blk), "sync.warmup_s: must be a positive multiple of block_s");
  req(y.nco_initial_offset_hz.empty() || y.nco_initial_offset_hz.size() == n,
      "sync.nco_initial_offset_hz: one entry per satellite required");
  req(y.histogram_bin_deg > 0.0, "sync.histogram_bin_deg: must be > 0");
  req(y.residual_decimation >= 1, "sync.residual_decimation: must be >= 1");
  for (std::size_t i = 0; i < c.reference_tone_hz.size(); ++i) {
    const double f = c.reference_tone_hz[i];
    const double off = i < y.nco_initial_offset_hz.size() ? y.nco_initial_offset_hz[i] : 0.0;
    req(f > 0.0, "carriers.reference_tone_hz: tones must be > 0");
    req(std::abs(f + off) < y.sample_rate_hz / 2.0, "carriers.reference_tone_hz: tone plus offset must stay below Nyquist");
  }

  const auto& im = s.impairments;
  req(im.converters.size() == n, "impairments.converters: one entry per satellite required");
  req(im.lnbs.size() == uts, "impairments.lnbs: one entry per user terminal required");
  auto check_traj = [&](const OscillatorTrajectory& t, const std::string& p) {
    req(t.random_walk_hz2_per_s >= 0.0, p + ".random_walk_hz2_per_s: must be >= 0");
    req(t.linewidth_hz >= 0.0, p + ".linewidth_hz: must be >= 0");
    req(std::isfinite(t.static_offset_hz) && std::isfinite(t.drift_rate_hz_per_s), p + ": offsets must be finite");
    for (const auto& st : t.steps) req(st.time_s >= 0.0, p + ".steps: times must be >= 0");
  };
  for (std::size_t i = 0; i < im.converters.size(); ++i) check_traj(im.converters[i], "impairments.converters[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < im.lnbs.size(); ++i) check_traj(im.lnbs[i], "impairments.lnbs[" + std::to_string(i) + "]");
  check_traj(im.gateway, "impairments.gateway");
  req(!std::isnan(im.tone_snr_db) && im.tone_snr_db > -std::numeric_limits<double>::infinity(),
      "impairments.tone_snr_db: must be a number or .inf");

  const auto& cs = s.csi;
  req(cs.pilot_length > 0 && cs.pilot_length % 2 == 0, "csi.pilot_length: must be even and > 0");
  req(n <= cs.pilot_length, "csi.pilot_length: must be at least the satellite count");
  req(cs.pilot_rate_hz > 0.0, "csi.pilot_rate_hz: must be > 0");
  req(cs.update_period_s > 0.0, "csi.update_period_s: must be > 0");
  req(cs.measurements_per_update >= 1, "csi.measurements_per_update: must be >= 1");
  req(cs.feedback_latency_s >= 0.0, "csi.feedback_latency_s: must be >= 0");
  if (cs.pilot_rate_hz > 0.0 && cs.measurements_per_update >= 1 && blk > 0.0) {
    const double slot = static_cast<double>(cs.pilot_length) / cs.pilot_rate_hz;
    req(is_multiple(slot, blk), "csi: pilot slot length must be a multiple of sync.block_s");
    req(is_multiple(cs.update_period_s / static_cast<double>(cs.measurements_per_update), blk),
        "csi: pilot slot spacing must be a multiple of sync.block_s");
  }

  const auto& en = s.engine;
  req(en.metric_window_s > 0.0 && en.metric_window_s * c.symbol_rate >= 1000.0,
      "engine.metric_window_s: must hold at least 1000 symbols");
  req(en.metric_interval_s > en.metric_window_s, "engine.metric_interval_s: must exceed the window length");
  if (blk > 0.0) {
    req(is_multiple(en.metric_window_s, blk), "engine.metric_window_s: must be a multiple of sync.block_s");
    req(is_multiple(0.5 * en.metric_interval_s, blk), "engine.metric_interval_s: half interval must be a multiple of sync.block_s");
  }
  req(en.propagation_s >= 0.0, "engine.propagation_s: must be >= 0");
  req(en.start_epoch_s >= 0.0, "engine.start_epoch_s: must be >= 0");
  req(en.active_satellite < std::max<std::size_t>(n, 1), "engine.active_satellite: index out of range");
  req(en.served_stream < std::max<std::size_t>(uts, 1), "engine.served_stream: index out of range");
  req(std::isfinite(en.decode_threshold_db), "engine.decode_threshold_db: must be finite");
  return e;
}

std::vector<std::string> validate_for_mode(const Scenario& s, Mode mode) {
  auto e = validate_scenario(s);
  if (mode == Mode::mimo) {
    if (s.num_user_terminals() > s.num_satellites())
      e.push_back("mimo mode requires K <= N (" + std::to_string(s.num_user_terminals()) +
                  " user terminals, " + std::to_string(s.num_satellites()) + " satellites)");
    if (s.duration_s < s.csi.update_period_s)
      e.push_back("mimo mode requires a duration of at least one CSI update period");
  }
  if (mode == Mode::uncoordinated && s.num_user_terminals() > s.num_satellites())
    e.push_back("uncoordinated mode requires K <= N");
  return e;
}

std::string emit_scenario(const Scenario& s) {
  YAML::Emitter out;
  auto num = [&](const std::string& k, double v) { out << YAML::Key << k << YAML::Value << fmt_double(v); };
  auto nums = [&](const std::string& k, const std::vector<double>& v) {
    out << YAML::Key << k << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << fmt_double(x);
    out << YAML::EndSeq;
  };
  auto traj = [&](const OscillatorTrajectory& t) {
    out << YAML::BeginMap;
    num("static_offset_hz", t.static_offset_hz);
    num("drift_rate_hz_per_s", t.drift_rate_hz_per_s);
    num("random_walk_hz2_per_s", t.random_walk_hz2_per_s);
    num("linewidth_hz", t.linewidth_hz);
    out << YAML::Key << "seed" << YAML::Value << t.seed;
    if (!t.steps.empty()) {
      out << YAML::Key << "steps" << YAML::Value << YAML::BeginSeq;
      for (const auto& st : t.steps) {
        out << YAML::Flow << YAML::BeginMap;
        num("time_s", st.time_s);
        num("delta_hz", st.delta_hz);
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  };

  out << YAML::BeginMap;
  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << s.name;
  num("duration_s", s.duration_s);
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::EndMap;

  out << YAML::Key << "carriers" << YAML::Value << YAML::BeginMap;
  nums("uplink_hz", s.carriers.uplink_hz);
  num("downlink_hz", s.carriers.downlink_hz);
  nums("reference_tone_hz", s.carriers.reference_tone_hz);
  num("symbol_rate", s.carriers.symbol_rate);
  num("rolloff", s.carriers.rolloff);
  out << YAML::EndMap;

  out << YAML::Key << "stations" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : s.stations) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << g.id;
    out << YAML::Key << "role" << YAML::Value << (g.role == StationRole::gateway ? "gateway" : "user_terminal");
    num("latitude_deg", g.position.latitude_deg);
    num("longitude_deg", g.position.longitude_deg);
    num("altitude_m", g.position.altitude_m);
    if (g.role == StationRole::user_terminal) num("cnr_db", g.cnr_db);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "satellites" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : s.satellites) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << m.id;
    num("nominal_longitude_deg", m.nominal_longitude_deg);
    num("mean_radius_m", m.mean_radius_m);
    num("radial_amplitude_m", m.radial_amplitude_m);
    num("oscillation_period_s", m.oscillation_period_s);
    num("oscillation_phase_rad", m.oscillation_phase_rad);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "impairments" << YAML::Value << YAML::BeginMap;
  num("tone_snr_db", s.impairments.tone_snr_db);
  out << YAML::Key << "converters" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : s.impairments.converters) traj(t);
  out << YAML::EndSeq;
  out << YAML::Key << "lnbs" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : s.impairments.lnbs) traj(t);
  out << YAML::EndSeq;
  out << YAML::Key << "gateway" << YAML::Value;
  traj(s.impairments.gateway);
  out << YAML::EndMap;

  const auto& y = s.sync;
  out << YAML::Key << "sync" << YAML::Value << YAML::BeginMap;
  num("sample_rate_hz", y.sample_rate_hz);
  num("loop_bandwidth_hz", y.loop_bandwidth_hz);
  num("damping", y.damping);
  num("fll_time_constant_s", y.fll_time_constant_s);
  num("block_s", y.block_s);
  num("rtt_s", y.rtt_s);
  num("warmup_s", y.warmup_s);
  nums("nco_initial_offset_hz", y.nco_initial_offset_hz);
  num("histogram_bin_deg", y.histogram_bin_deg);
  out << YAML::Key << "residual_decimation" << YAML::Value << y.residual_decimation;
  out << YAML::EndMap;

  const auto& c = s.csi;
  out << YAML::Key << "csi" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "pilot_length" << YAML::Value << c.pilot_length;
  num("pilot_rate_hz", c.pilot_rate_hz);
  num("update_period_s", c.update_period_s);
  out << YAML::Key << "measurements_per_update" << YAML::Value << c.measurements_per_update;
  num("feedback_latency_s", c.feedback_latency_s);
  num("pilot_snr_offset_db", c.pilot_snr_offset_db);
  out << YAML::Key << "perfect" << YAML::Value << c.perfect;
  out << YAML::Key << "replay_path" << YAML::Value << YAML::DoubleQuoted << c.replay_path;
  out << YAML::EndMap;

  const auto& e = s.engine;
  out << YAML::Key << "engine" << YAML::Value << YAML::BeginMap;
  num("metric_window_s", e.metric_window_s);
  num("metric_interval_s", e.metric_interval_s);
  out << YAML::Key << "symbol_model" << YAML::Value << (e.symbol_model == SymbolModel::qpsk ? "qpsk" : "gaussian");
  num("decode_threshold_db", e.decode_threshold_db);
  num("propagation_s", e.propagation_s);
  num("start_epoch_s", e.start_epoch_s);
  out << YAML::Key << "active_satellite" << YAML::Value << e.active_satellite;
  out << YAML::Key << "served_stream" << YAML::Value << e.served_stream;
  out << YAML::Key << "constellation_points" << YAML::Value << e.constellation_points;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string canonical_json(const Scenario& s) {
  nlohmann::json j;
  j["run"] = {{"name", s.name}, {"duration_s", jnum(s.duration_s)}, {"seed", s.seed}};
  j["carriers"] = {{"uplink_hz", s.carriers.uplink_hz},
                   {"downlink_hz", jnum(s.carriers.downlink_hz)},
                   {"reference_tone_hz", s.carriers.reference_tone_hz},
                   {"symbol_rate", jnum(s.carriers.symbol_rate)},
                   {"rolloff", jnum(s.carriers.rolloff)}};
  j["stations"] = nlohmann::json::array();
  for (const auto& g : s.stations)
    j["stations"].push_back({{"id", g.id},
                             {"role", g.role == StationRole::gateway ? "gateway" : "user_terminal"},
                             {"latitude_deg", jnum(g.position.latitude_deg)},
                             {"longitude_deg", jnum(g.position.longitude_deg)},
                             {"altitude_m", jnum(g.position.altitude_m)},
                             {"cnr_db", jnum(g.cnr_db)}});
  j["satellites"] = nlohmann::json::array();
  for (const auto& m : s.satellites)
    j["satellites"].push_back({{"id", m.id},
                               {"nominal_longitude_deg", jnum(m.nominal_longitude_deg)},
                               {"mean_radius_m", jnum(m.mean_radius_m)},
                               {"radial_amplitude_m", jnum(m.radial_amplitude_m)},
                               {"oscillation_period_s", jnum(m.oscillation_period_s)},
                               {"oscillation_phase_rad", jnum(m.oscillation_phase_rad)}});
  auto& im = j["impairments"];
  im["tone_snr_db"] = jnum(s.impairments.tone_snr_db);
  im["converters"] = nlohmann::json::array();
  for (const auto& t : s.impairments.converters) im["converters"].push_back(traj_json(t));
  im["lnbs"] = nlohmann::json::array();
  for (const auto& t : s.impairments.lnbs) im["lnbs"].push_back(traj_json(t));
  im["gateway"] = traj_json(s.impairments.gateway);
  const auto& y = s.sync;
  j["sync"] = {{"sample_rate_hz", jnum(y.sample_rate_hz)},
               {"loop_bandwidth_hz", jnum(y.loop_bandwidth_hz)},
               {"damping", jnum(y.damping)},
               {"fll_time_constant_s", jnum(y.fll_time_constant_s)},
               {"block_s", jnum(y.block_s)},
               {"rtt_s", jnum(y.rtt_s)},
               {"warmup_s", jnum(y.warmup_s)},
               {"nco_initial_offset_hz", y.nco_initial_offset_hz},
               {"histogram_bin_deg", jnum(y.histogram_bin_deg)},
               {"residual_decimation", y.residual_decimation}};
  const auto& c = s.csi;
  j["csi"] = {{"pilot_length", c.pilot_length},
              {"pilot_rate_hz", jnum(c.pilot_rate_hz)},
              {"update_period_s", jnum(c.update_period_s)},
              {"measurements_per_update", c.measurements_per_update},
              {"feedback_latency_s", jnum(c.feedback_latency_s)},
              {"pilot_snr_offset_db", jnum(c.pilot_snr_offset_db)},
              {"perfect", c.perfect},
              {"replay_path", c.replay_path}};
  const auto& e = s.engine;
  j["engine"] = {{"metric_window_s", jnum(e.metric_window_s)},
                 {"metric_interval_s", jnum(e.metric_interval_s)},
                 {"symbol_model", e.symbol_model == SymbolModel::qpsk ? "qpsk" : "gaussian"},
                 {"decode_threshold_db", jnum(e.decode_threshold_db)},
                 {"propagation_s", jnum(e.propagation_s)},
                 {"start_epoch_s", jnum(e.start_epoch_s)},
                 {"active_satellite", e.active_satellite},
                 {"served_stream", e.served_stream},
                 {"constellation_points", e.constellation_points}};
  return j.dump();
}

std::string config_hash(const Scenario& s) {
  const std::string text = canonical_json(s);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::optional<std::string> preset_text(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return std::string(p.text);
  return std::nullopt;
}

}  // namespace satmimo
