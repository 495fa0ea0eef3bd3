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
#include <random>

#include "oracles.hpp"
#include "satmimo/channel.hpp"
#include "satmimo/config.hpp"

using namespace satmimo;

namespace {

Scenario two_by_two(double second_radius_offset_m, double second_lon = 7.0) {
  Scenario sc = parse_scenario("ideal");
  sc.satellites[1].nominal_longitude_deg = second_lon;
  sc.satellites[1].mean_radius_m = kGeoRadius + second_radius_offset_m;
  return sc;
}

Eigen::Matrix2cd as2(const CMatrix& m) { return m.block<2, 2>(0, 0); }

CMatrix random_unit_diag(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  CMatrix d = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = std::polar(1.0, u(rng));
  return d;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("one wavelength gives zero phase and 1/(4 pi) magnitude") {
  const double f = 11.5e9;
  const Complex h = los_coefficient(kSpeedOfLight / f, f);
  CHECK(std::abs(h) == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-14));
  CHECK(std::abs(std::arg(h)) < 1e-6);
}

TEST_CASE("free-space magnitude at GEO range") {
  const double f = 11.5e9, d = 38607e3;
  const long double ref = oracle::kC / (4.0L * oracle::kPiL * f * d);
  const double mag = std::abs(los_coefficient(d, f));
  CHECK(mag == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
  CHECK(std::abs(mag - 5.4e-11) < 1e-12);
}

TEST_CASE("doubling distance halves the magnitude") {
  for (double d : {1.0, 123.4, 3.8e7})
    CHECK(std::abs(los_coefficient(2 * d, 12e9)) == doctest::Approx(0.5 * std::abs(los_coefficient(d, 12e9))).epsilon(1e-14));
  CHECK_THROWS(los_coefficient(0.0, 12e9));
  CHECK_THROWS(los_coefficient(10.0, -1.0));
}

TEST_CASE("single link matrix is the LOS coefficient") {
  Scenario sc = parse_scenario("ideal");
  sc.stations.pop_back();
  sc.satellites.pop_back();
  const auto h = build_channel_matrix(sc, 0.0);
  REQUIRE(h.users() == 1);
  REQUIRE(h.satellites() == 1);
  const double d = slant_range(*sc.user_terminals()[0], sc.satellites[0], 0.0);
  CHECK(std::abs(h.entries(0, 0) - los_coefficient(d, 11.5e9)) == 0.0);
  CHECK(h.source == ChannelSource::geometric);
  CHECK(h.carrier_hz == 11.5e9);
}

TEST_CASE("identical satellites give a rank-one channel") {
  const auto h = build_channel_matrix(two_by_two(0.0), 0.0);
  CHECK(h.entries.col(0).isApprox(h.entries.col(1), 0.0));
  CHECK(condition_number(h.entries) > 1e12);
}

TEST_CASE("radially separated satellites give a full-rank channel") {
  const auto h = build_channel_matrix(two_by_two(20e3), 0.0);
  const auto sv = oracle::singular_values_2x2(as2(h.entries));
  REQUIRE(sv[1] > 0.0);
  const double cond = condition_number(h.entries);
  CHECK(std::isfinite(cond));
  CHECK(cond == doctest::Approx(sv[0] / sv[1]).epsilon(1e-6));
}

TEST_CASE("effective channel with identity offsets is unchanged") {
  std::mt19937_64 rng(1);
  const CMatrix H = oracle::random_complex(2, 2, rng);
  CHECK(effective_channel(H, CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)) == H);
  CHECK_THROWS(effective_channel(H, CMatrix::Identity(3, 3), CMatrix::Identity(2, 2)));
  CHECK_THROWS(effective_channel(H, CMatrix::Identity(2, 2), CMatrix::Identity(1, 1)));
}

TEST_CASE("common transmit phase rotates every entry") {
  std::mt19937_64 rng(2);
  const CMatrix H = oracle::random_complex(2, 2, rng);
  const double a = 0.7;
  const CMatrix T = std::polar(1.0, a) * CMatrix::Identity(2, 2);
  const CMatrix E = effective_channel(H, T, CMatrix::Identity(2, 2));
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 2; ++c)
      CHECK(std::abs(E(r, c) - H(r, c) * std::polar(1.0, a)) < 1e-15);
  const auto s0 = oracle::singular_values_2x2(as2(H));
  const auto s1 = oracle::singular_values_2x2(as2(E));
  CHECK(s0[0] == doctest::Approx(s1[0]).epsilon(1e-12));
  CHECK(s0[1] == doctest::Approx(s1[1]).epsilon(1e-12));
}

TEST_CASE("unit-modulus diagonal offsets preserve singular values") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const CMatrix H = oracle::random_complex(2, 2, rng);
    const CMatrix E = effective_channel(H, random_unit_diag(2, rng), random_unit_diag(2, rng));
    const auto a = oracle::singular_values_2x2(as2(H));
    const auto b = oracle::singular_values_2x2(as2(E));
    CHECK(std::abs(a[0] - b[0]) < 1e-12);
    CHECK(std::abs(a[1] - b[1]) < 1e-12);
  }
}

TEST_CASE("entry phases advance with the range change") {
  const Scenario sc = parse_scenario("paper-trial");
  const double f = sc.carriers.downlink_hz, dt = 1e-3;
  for (double t : {0.0, 21600.0, 50000.0}) {
    const auto h0 = build_channel_matrix(sc, t);
    const auto h1 = build_channel_matrix(sc, t + dt);
    const auto uts = sc.user_terminals();
    for (std::size_t k = 0; k < uts.size(); ++k)
      for (std::size_t n = 0; n < sc.satellites.size(); ++n) {
        const auto r = static_cast<Eigen::Index>(k), c = static_cast<Eigen::Index>(n);
        const double dd = slant_range(*uts[k], sc.satellites[n], t + dt) - slant_range(*uts[k], sc.satellites[n], t);
        const double expected = -kTwoPi * f * dd / kSpeedOfLight;
        const double got = std::arg(h1.entries(r, c) / h0.entries(r, c));
        CHECK(std::abs(wrap_phase(got - expected)) < 1e-3);
      }
  }
}

}  // TEST_SUITE
