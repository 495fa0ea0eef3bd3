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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "satmimo/config.hpp"
#include "satmimo/io.hpp"

using namespace satmimo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("satmimo-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Scenario perturbed(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Scenario s = parse_scenario("paper-trial");
  s.name = "perturbed-" + std::to_string(rng() % 1000);
  s.duration_s = 10.0 + 50.0 * std::abs(u(rng));
  s.seed = rng();
  for (auto& st : s.stations) {
    st.position.latitude_deg += 0.01 * u(rng);
    st.position.longitude_deg += 0.01 * u(rng);
    st.position.altitude_m = 500.0 + 100.0 * u(rng);
    if (st.role == StationRole::user_terminal) {
      st.cnr_db = 12.0 + 5.0 * u(rng);
      st.noise_variance = std::pow(10.0, -st.cnr_db / 10.0);
    }
  }
  for (auto& m : s.satellites) m.oscillation_phase_rad = u(rng);
  for (auto& c : s.impairments.converters) {
    c.static_offset_hz = 20000.0 * u(rng);
    c.linewidth_hz = 0.001 * (1.0 + u(rng));
    c.seed = rng();
  }
  s.impairments.lnbs[0].steps = {{12.5, 0.3 * u(rng)}};
  s.sync.nco_initial_offset_hz = {1000.0 * u(rng), 1000.0 * u(rng)};
  s.csi.feedback_latency_s = 0.1 + 0.05 * std::abs(u(rng));
  s.csi.perfect = rng() % 2 == 0;
  s.engine.symbol_model = rng() % 2 == 0 ? SymbolModel::qpsk : SymbolModel::gaussian;
  return s;
}

}  // namespace

TEST_SUITE("cli-io") {

TEST_CASE("trial preset content") {
  const Scenario s = parse_scenario("paper-trial");
  REQUIRE(s.num_satellites() == 2);
  for (const auto& m : s.satellites) CHECK(std::abs(m.nominal_longitude_deg - 7.0) < 0.05);
  const auto uts = s.user_terminals();
  REQUIRE(uts.size() == 2);
  CHECK(uts[0]->position.latitude_deg == doctest::Approx(48.073556));
  CHECK(uts[0]->position.longitude_deg == doctest::Approx(11.63054633));
  CHECK(uts[1]->position.latitude_deg == doctest::Approx(48.073395));
  CHECK(uts[1]->position.longitude_deg == doctest::Approx(11.6308));
  CHECK(s.carriers.downlink_hz == 11.5e9);
  CHECK(s.carriers.symbol_rate == 1.25e6);
  CHECK(validate_scenario(s).empty());
  CHECK(validate_for_mode(s, Mode::mimo).empty());
  for (const auto& name : preset_names()) CHECK_NOTHROW(parse_scenario(name));
}

TEST_CASE("empty document lists every missing section") {
  try {
    parse_scenario_text("");
    FAIL("expected a scenario error");
  } catch (const ScenarioError& e) {
    std::string all;
    for (const auto& m : e.errors()) all += m + "\n";
    for (const char* sec : {"run", "carriers", "stations", "satellites", "impairments"})
      CHECK(all.find(sec) != std::string::npos);
  }
}

TEST_CASE("all errors of a broken file are reported together") {
  try {
    parse_scenario(std::string(SATMIMO_TEST_DATA) + "/broken.yaml");
    FAIL("expected a scenario error");
  } catch (const ScenarioError& e) {
    CHECK(e.errors().size() >= 3);
  }
  CHECK_THROWS_AS(parse_scenario("/nonexistent/file.yaml"), ScenarioError);
}

TEST_CASE("more users than satellites is rejected for MIMO") {
  const Scenario s = parse_scenario(std::string(SATMIMO_TEST_DATA) + "/three-users.yaml");
  const auto errs = validate_for_mode(s, Mode::mimo);
  REQUIRE_FALSE(errs.empty());
  bool mentions = false;
  for (const auto& e : errs) mentions |= e.find("K") != std::string::npos || e.find("user") != std::string::npos;
  CHECK(mentions);
  CHECK(validate_for_mode(s, Mode::siso).empty());
}

TEST_CASE("emit and parse round-trip") {
  for (const auto& name : preset_names()) {
    const Scenario s = parse_scenario(name);
    CHECK(parse_scenario_text(emit_scenario(s)) == s);
  }
  std::mt19937_64 rng(123);
  for (int i = 0; i < 50; ++i) {
    const Scenario s = perturbed(rng);
    const Scenario back = parse_scenario_text(emit_scenario(s));
    CHECK(back == s);
    CHECK(config_hash(back) == config_hash(s));
  }
}

TEST_CASE("config hash ignores formatting but not values") {
  const std::string block = *preset_text("ideal");
  const Scenario a = parse_scenario_text(block);
  const Scenario b = parse_scenario_text(emit_scenario(a));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  Scenario c = a;
  c.stations[1].cnr_db += 0.1;
  CHECK(config_hash(c) != config_hash(a));
  // Reordered keys and flow style.
  const std::string flow =
      "impairments: {tone_snr_db: .inf}\n"
      "satellites: [{nominal_longitude_deg: 7.0, id: sat1}, {id: sat2, nominal_longitude_deg: 7.022}]\n"
      "stations:\n"
      "  - {altitude_m: 540, role: gateway, id: gw, longitude_deg: 11.6335, latitude_deg: 48.0777}\n"
      "  - {cnr_db: 16.5, id: ut1, role: user-terminal, latitude_deg: 48.073556, longitude_deg: 11.63054633, altitude_m: 540}\n"
      "  - {id: ut2, role: user_terminal, latitude_deg: 48.073395, longitude_deg: 11.6308, altitude_m: 540, cnr_db: 10.9}\n"
      "sync: {nco_initial_offset_hz: [0.0, 0]}\n"
      "carriers: {symbol_rate: 1250000, reference_tone_hz: [2.0e4, 6.0e4], downlink_hz: 11500000000, uplink_hz: [1.3e10, 13002000000]}\n"
      "run: {seed: 1, duration_s: 30.0, name: ideal}\n";
  CHECK(config_hash(parse_scenario_text(flow)) == config_hash(a));
}

TEST_CASE("channel and snapshot JSON round-trip") {
  ChannelMatrix h;
  h.entries = CMatrix::Random(2, 3);
  h.carrier_hz = 11.5e9;
  h.timestamp_s = 4.25;
  h.source = ChannelSource::estimated;
  const auto back = channel_from_json(to_json(h));
  CHECK(back.entries == h.entries);
  CHECK(back.timestamp_s == h.timestamp_s);
  CHECK(back.source == ChannelSource::estimated);

  CsiSnapshot s;
  s.h_est = h;
  s.h_est.entries = CMatrix::Random(1, 2);
  s.measurement_times = {1.0, 2.0, 3.0};
  s.n_averaged = 3;
  s.ut_id = "ut2";
  nlohmann::json doc = nlohmann::json::array({to_json(s, 3.1)});
  const auto replay = replay_from_json(doc);
  REQUIRE(replay.size() == 1);
  CHECK(replay[0].time_s == 3.1);
  CHECK(replay[0].snapshot.ut_id == "ut2");
  CHECK(replay[0].snapshot.n_averaged == 3);
  CHECK(replay[0].snapshot.h_est.entries == s.h_est.entries);
}

TEST_CASE("run command writes every declared file and is repeatable") {
  const fs::path out = scratch("run");
  RunManifest m;
  m.scenario = "ideal";
  m.modes = {Mode::siso, Mode::mimo};
  m.seed = 7;
  m.duration_s = 6.0;
  m.out_dir = out;
  std::ostringstream log;
  REQUIRE(run_command(m, false, log) == 0);
  const auto doc = nlohmann::json::parse(slurp(out / "metrics.json"));
  CHECK(doc["reports"].contains("siso"));
  CHECK(doc["reports"].contains("mimo"));
  CHECK(doc["comparison"].is_object());
  CHECK(doc["manifest"]["seed"] == 7);
  std::map<std::string, std::string> first;
  for (const auto& f : doc["manifest"]["files"]) {
    const fs::path p = out / f.get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(fs::file_size(p) > 0);
    first[f.get<std::string>()] = slurp(p);
  }
  CHECK(first.count("residual_phase_hist.csv") == 1);

  CHECK(run_command(m, false, log) == 4);  // refuses to overwrite
  REQUIRE(run_command(m, true, log) == 0);
  for (const auto& [name, content] : first) CHECK(slurp(out / name) == content);

  // Reports read back and compare through the command as well.
  std::ostringstream cmp;
  CHECK(compare_command(out / "metrics.json", Mode::siso, out / "metrics.json", Mode::mimo, cmp) == 0);
  CHECK(cmp.str().find("ratio") != std::string::npos);
  const auto rep = report_from_json(doc["reports"]["mimo"]);
  CHECK(rep.mode == Mode::mimo);
  CHECK(rep.uts.size() == 2);
  fs::remove_all(out);
}

TEST_CASE("invalid scenario and aborted run exit codes") {
  std::ostringstream log;
  RunManifest bad;
  bad.scenario = std::string(SATMIMO_TEST_DATA) + "/broken.yaml";
  bad.modes = {Mode::siso};
  bad.out_dir = scratch("bad");
  CHECK(run_command(bad, false, log) == 2);
  CHECK_FALSE(fs::exists(bad.out_dir / "metrics.json"));

  const fs::path yaml = fs::temp_directory_path() / "satmimo-test-nolock.yaml";
  {
    Scenario s = parse_scenario("ideal");
    s.sync.warmup_s = 0.5;
    s.sync.nco_initial_offset_hz = {60.0, -60.0};
    std::ofstream f(yaml);
    f << emit_scenario(s);
  }
  RunManifest ab;
  ab.scenario = yaml.string();
  ab.modes = {Mode::siso};
  ab.duration_s = 2.0;
  ab.out_dir = scratch("abort");
  CHECK(run_command(ab, false, log) == 3);
  const auto doc = nlohmann::json::parse(slurp(ab.out_dir / "metrics.json"));
  CHECK(doc["diagnostic"].get<std::string>().find("not locked") != std::string::npos);
  fs::remove_all(ab.out_dir);
  fs::remove(yaml);
}

TEST_CASE("exported snapshots replay into the same precoded result") {
  const fs::path out = scratch("replay-src");
  RunManifest m;
  m.scenario = "paper-trial";
  m.modes = {Mode::mimo};
  m.duration_s = 11.0;
  m.out_dir = out;
  std::ostringstream log;
  REQUIRE(run_command(m, false, log) == 0);
  const auto original = nlohmann::json::parse(slurp(out / "metrics.json"))["reports"]["mimo"];

  Scenario s = parse_scenario("paper-trial");
  s.duration_s = 11.0;
  s.csi.replay_path = (out / "csi" / "mimo_snapshots.json").string();
  const fs::path yaml = fs::temp_directory_path() / "satmimo-test-replay.yaml";
  {
    std::ofstream f(yaml);
    f << emit_scenario(s);
  }
  RunManifest r = m;
  r.scenario = yaml.string();
  r.out_dir = scratch("replay-dst");
  REQUIRE(run_command(r, false, log) == 0);
  const auto replayed = nlohmann::json::parse(slurp(r.out_dir / "metrics.json"))["reports"]["mimo"];
  REQUIRE(replayed["uts"].size() == 2);
  for (std::size_t k = 0; k < 2; ++k)
    CHECK(replayed["uts"][k]["mer_db"].get<double>() ==
          doctest::Approx(original["uts"][k]["mer_db"].get<double>()).epsilon(1e-9));
  fs::remove_all(out);
  fs::remove_all(r.out_dir);
  fs::remove(yaml);
}

}  // TEST_SUITE
