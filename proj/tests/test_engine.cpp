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

#include <cmath>

#include "satmimo/channel.hpp"
#include "satmimo/config.hpp"
#include "satmimo/engine.hpp"
#include "satmimo/io.hpp"

using namespace satmimo;

namespace {

Scenario ideal(double duration = 6.0) {
  Scenario sc = parse_scenario("ideal");
  sc.duration_s = duration;
  return sc;
}

double window_mean(const MetricsReport& r, double from, double to) {
  // Circular mean of the recorded residual phase within [from, to).
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < r.residual_times.size(); ++i)
    if (r.residual_times[i] >= from && r.residual_times[i] < to) acc += unit_phasor(deg2rad(r.residual.samples_deg[i]));
  return std::arg(acc);
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("event queue orders by time, then fixed priority, then insertion") {
  EventQueue q;
  q.push(to_ns(1.0), EventType::metric_window, 1);
  q.push(to_ns(1.0), EventType::pll_block, 2);
  q.push(to_ns(0.5), EventType::csi_delivery, 3);
  q.push(to_ns(1.0), EventType::pilot_slot, 4);
  q.push(to_ns(1.0), EventType::pll_block, 5);
  q.push(to_ns(1.0), EventType::precoder_update, 6);
  std::vector<std::size_t> order;
  while (!q.empty()) order.push_back(q.pop().payload);
  CHECK(order == std::vector<std::size_t>{3, 2, 5, 4, 6, 1});
  CHECK(q.now() == to_ns(1.0));
  CHECK_THROWS(q.push(to_ns(0.9), EventType::pll_block));
  CHECK_THROWS(q.pop());
}

TEST_CASE("delay scheduling") {
  const auto a = schedule_delays(EventType::pll_block, 2.0, 0.125, 0.0);
  REQUIRE(a.size() == 1);
  CHECK(a[0].time_s == 2.0);
  const auto b = schedule_delays(EventType::pll_block, 2.0, 0.125, 0.25);
  CHECK(b[0].time_s == doctest::Approx(2.25));
  CHECK(b[0].source_time_s == 2.0);
  const auto c = schedule_delays(EventType::pilot_slot, 5.0, 0.125, 0.25, 0.1);
  REQUIRE(c.size() == 2);
  CHECK(c[0].type == EventType::csi_delivery);
  CHECK(c[0].time_s == doctest::Approx(5.225));
  CHECK(c[1].type == EventType::precoder_update);
  CHECK(c[1].time_s == doctest::Approx(5.35));
  CHECK_THROWS(schedule_delays(EventType::pll_block, 1.0, -0.1, 0.25));
  CHECK_THROWS(schedule_delays(EventType::pll_block, 1.0, 0.1, -0.25));
  CHECK_THROWS(schedule_delays(EventType::pilot_slot, 1.0, 0.1, 0.25, -1.0));
}

TEST_CASE("link budget reproduces the configured single-satellite CNR") {
  const Scenario sc = parse_scenario("paper-trial");
  const auto lb = make_link_budget(build_channel_matrix(sc, 0.0).entries, {16.5, 10.9}, 0);
  CHECK(std::abs(lb.channel(0, 0)) == doctest::Approx(1.0));
  CHECK(10.0 * std::log10(std::norm(lb.channel(0, 0)) / lb.noise_variance[0]) == doctest::Approx(16.5));
  CHECK(10.0 * std::log10(std::norm(lb.channel(1, 0)) / lb.noise_variance[1]) == doctest::Approx(10.9));
  CHECK_THROWS(make_link_budget(build_channel_matrix(sc, 0.0).entries, {16.5}, 0));
}

TEST_CASE("mode names") {
  CHECK(parse_mode("siso") == Mode::siso);
  CHECK(parse_mode("mimo") == Mode::mimo);
  CHECK(parse_mode("mimo-precoded") == Mode::mimo);
  CHECK(parse_mode("uncoordinated-ffr") == Mode::uncoordinated);
  CHECK(mode_name(Mode::uncoordinated) == "uncoordinated");
  CHECK_THROWS(parse_mode("beamhop"));
}

TEST_CASE("SISO without impairments reaches the configured CNRs") {
  const auto r = run(ideal(), Mode::siso);
  REQUIRE(r.uts.size() == 2);
  CHECK(std::abs(r.uts[0].mer_db - 16.5) < 0.2);
  CHECK(std::abs(r.uts[1].mer_db - 10.9) < 0.2);
  CHECK(r.uts[0].decoded_stream == 0);
  CHECK(r.uts[1].decoded_stream == 0);
  CHECK(r.sum_rate == doctest::Approx(r.per_user_rate[0] + r.per_user_rate[1]).epsilon(1e-12));
}

TEST_CASE("uncoordinated full reuse interferes to about 0 dB") {
  const auto r = run(ideal(), Mode::uncoordinated);
  for (const auto& u : r.uts) {
    CHECK(std::abs(u.mer_db) < 1.0);
    CHECK(u.decoded_stream == -1);
    CHECK(u.rate == 0.0);
  }
}

TEST_CASE("MIMO with perfect CSI isolates streams and delivers the ZF gain") {
  Scenario sc = ideal();
  sc.csi.perfect = true;
  const auto r = run(sc, Mode::mimo);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& u = r.uts[k];
    CHECK(u.leakage_db < -60.0);
    CHECK(u.decoded_stream == static_cast<int>(k));
    const double cnr = k == 0 ? 16.5 : 10.9;
    CHECK(std::abs(u.mer_db - cnr - u.predicted_gain_db) < 0.2);
  }
  CHECK(r.sum_rate == doctest::Approx(r.per_user_rate[0] + r.per_user_rate[1]).epsilon(1e-12));
}

TEST_CASE("receiver-side LNB offsets do not affect precoded MER") {
  Scenario sc = ideal();
  sc.csi.perfect = true;
  const auto base = run(sc, Mode::mimo);
  sc.impairments.lnbs.resize(2);
  sc.impairments.lnbs[0].static_offset_hz = 1e6;
  sc.impairments.lnbs[0].linewidth_hz = 2.0;
  sc.impairments.lnbs[1].static_offset_hz = -7.7e5;
  sc.impairments.lnbs[1].drift_rate_hz_per_s = 40.0;
  const auto lnb = run(sc, Mode::mimo);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(lnb.uts[k].mer_db - base.uts[k].mer_db) < 1e-6);
    CHECK(lnb.uts[k].leakage_db < -60.0);
  }
}

TEST_CASE("a 1 Hz step seen across the loop delay shifts the residual by 90 deg") {
  Scenario sc = ideal(10.0);
  sc.impairments.converters.resize(2);
  sc.impairments.converters[0].steps = {{7.0, 1.0}};
  const auto r = run(sc, Mode::siso);
  const double before = window_mean(r, 3.5, 6.9);
  const double after = window_mean(r, 9.0, 13.0);
  CHECK(std::abs(std::abs(rad2deg(wrap_phase(after - before))) - 90.0) < 1.0);
}

TEST_CASE("slow Doppler alone is compensated across the loop delay") {
  Scenario sc = parse_scenario("paper-trial");
  sc.duration_s = 60.0;
  for (auto& c : sc.impairments.converters) c = OscillatorTrajectory{};
  for (auto& l : sc.impairments.lnbs) l = OscillatorTrajectory{};
  sc.impairments.gateway = OscillatorTrajectory{};
  sc.impairments.tone_snr_db = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < 2; ++n) sc.sync.nco_initial_offset_hz[n] = loop_doppler(sc, n, 0.0) + 20.0;
  const auto r = run(sc, Mode::siso);
  CHECK(r.residual.std_deg < 0.5);
}

TEST_CASE("single terminal: ZF collapses to per-antenna matched filtering") {
  Scenario sc = ideal();
  sc.csi.perfect = true;
  sc.stations.pop_back();
  sc.impairments.lnbs.pop_back();
  const auto siso = run(sc, Mode::siso);
  const auto mimo = run(sc, Mode::mimo);
  const CMatrix h = make_link_budget(build_channel_matrix(sc, 0.0).entries, {16.5}, 0).channel;
  const double peak = std::max(std::norm(h(0, 0)), std::norm(h(0, 1)));
  const double mf_gain = std::pow(h.row(0).squaredNorm(), 2) / peak / std::norm(h(0, 0));
  CHECK(mimo.uts[0].predicted_gain_db == doctest::Approx(10.0 * std::log10(mf_gain)).epsilon(1e-6));
  CHECK(std::abs(mimo.uts[0].mer_db - siso.uts[0].mer_db - 10.0 * std::log10(mf_gain)) < 0.2);
  const auto cmp = compare_modes(siso, mimo);
  CHECK(cmp.rate_ratio >= 1.0);
}

TEST_CASE("runs are deterministic") {
  Scenario sc = parse_scenario("paper-trial");
  sc.duration_s = 6.0;
  const auto a = run(sc, Mode::mimo, {});
  const auto b = run(sc, Mode::mimo, {});
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.residual.samples_deg == b.residual.samples_deg);
  CHECK(a.constellations == b.constellations);
  RunOptions other;
  other.seed = 5;
  CHECK(run(sc, Mode::mimo, other).residual.samples_deg != a.residual.samples_deg);
}

TEST_CASE("comparison summary") {
  const auto r = run(ideal(2.0), Mode::siso);
  const auto same = compare_modes(r, r);
  for (double d : same.mer_delta_db) CHECK(d == 0.0);
  CHECK(same.rate_ratio == doctest::Approx(1.0));
  auto other = r;
  other.seed = r.seed + 1;
  CHECK_THROWS(compare_modes(r, other));
  other = r;
  other.scenario_name = "elsewhere";
  CHECK_THROWS(compare_modes(r, other));
}

TEST_CASE("no lock by the end of warm-up aborts the run") {
  Scenario sc = ideal(2.0);
  sc.sync.warmup_s = 0.5;
  sc.sync.nco_initial_offset_hz = {60.0, -60.0};
  CHECK_THROWS_AS(run(sc, Mode::siso), SimulationAborted);
}

TEST_CASE("mode preconditions") {
  Scenario sc = ideal(2.0);
  CHECK_FALSE(validate_for_mode(sc, Mode::mimo).empty());  // shorter than one CSI period
  CHECK(validate_for_mode(sc, Mode::siso).empty());
  CHECK_THROWS(run(sc, Mode::mimo));
}

}  // TEST_SUITE
