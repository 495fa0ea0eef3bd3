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
#include "satmimo/config.hpp"
#include "satmimo/csi.hpp"
#include "satmimo/engine.hpp"
#include "satmimo/precoder.hpp"
#include "satmimo/waveform.hpp"

using namespace satmimo;

namespace {

std::vector<Complex> received(const PilotBook& book, const CVector& h, double noise_var, std::mt19937_64& rng) {
  std::vector<Complex> r(book.length(), Complex{0.0, 0.0});
  for (std::size_t n = 0; n < book.sequences.size(); ++n)
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += h(static_cast<Eigen::Index>(n)) * book.sequences[n][i];
  if (noise_var > 0.0) add_complex_noise(r, noise_var, rng);
  return r;
}

CsiSnapshot snapshot(const CVector& h, double t, std::string id = "ut1") {
  CsiSnapshot s;
  s.h_est.entries = h.transpose();
  s.h_est.source = ChannelSource::estimated;
  s.h_est.timestamp_s = t;
  s.measurement_times = {t};
  s.ut_id = std::move(id);
  return s;
}

}  // namespace

TEST_SUITE("csi") {

TEST_CASE("single sequence: constant modulus and autocorrelation peak") {
  const auto book = make_pilot_book(1, 2000);
  REQUIRE(book.sequences.size() == 1);
  const auto& s = book.sequences[0];
  for (Complex v : s) REQUIRE(std::abs(std::abs(v) - 1.0) < 1e-12);
  Complex peak{0.0, 0.0};
  for (Complex v : s) peak += v * std::conj(v);
  CHECK(std::abs(peak) == doctest::Approx(2000.0));
  // Off-peak cyclic autocorrelation of an even-length root-1 sequence vanishes.
  for (std::size_t lag : {1u, 7u, 1000u}) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < s.size(); ++i) acc += s[(i + lag) % s.size()] * std::conj(s[i]);
    CHECK(std::abs(acc) < 1e-6 * 2000.0);
  }
}

TEST_CASE("shifted sequences are orthogonal") {
  for (std::size_t n : {2u, 4u}) {
    const auto book = make_pilot_book(n, 2000);
    CHECK(book.shift == 2000 / n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        Complex ip{0.0, 0.0};
        for (std::size_t i = 0; i < 2000; ++i) ip += std::conj(book.sequences[a][i]) * book.sequences[b][i];
        CHECK(std::abs(ip) < 1e-9 * 2000.0);
      }
  }
  CHECK_THROWS(make_pilot_book(3, 2));
  CHECK_THROWS(make_pilot_book(1, 2001));
}

TEST_CASE("noiseless pilots are recovered exactly") {
  const auto book = make_pilot_book(2, 2000);
  CVector h(2);
  h << Complex(0.3, -1.2), Complex(-0.7, 0.05);
  std::mt19937_64 rng(1);
  const auto est = blue_estimate(received(book, h, 0.0, rng), book, 0.0);
  CHECK((est.h - h).norm() < 1e-12);
  CVector one(2);
  one << Complex(2.5, 1.0), Complex(0.0, 0.0);
  const auto e1 = blue_estimate(received(book, one, 0.0, rng), book, 0.0);
  CHECK(std::abs(e1.h(1)) < 1e-12);
  CHECK_THROWS(blue_estimate(std::vector<Complex>(10), book, 1.0));
}

TEST_CASE("pure noise: zero mean, variance sigma^2/L") {
  const auto book = make_pilot_book(2, 2000);
  const double s2 = 0.5;
  std::vector<double> re;
  Complex mean{0.0, 0.0};
  double var = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(1000 + s);
    const auto est = blue_estimate(received(book, CVector::Zero(2), s2, rng), book, s2);
    mean += est.h(0);
    var += std::norm(est.h(0));
    CHECK(est.error_variance == doctest::Approx(s2 / 2000.0));
  }
  mean /= seeds;
  var /= seeds;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(s2 / 2000.0 / seeds));
  CHECK(var == doctest::Approx(s2 / 2000.0).epsilon(0.10));
}

TEST_CASE("scheduling of deliveries") {
  CHECK(feedback_schedule(0.0, 15.0, 0.0, 5.0) == std::vector<double>{5.0, 10.0, 15.0});
  CHECK(feedback_schedule(0.0, 15.0, 0.5, 5.0) == std::vector<double>{5.5, 10.5, 15.5});
  CHECK_THROWS(feedback_schedule(0.0, 15.0, -0.1, 5.0));
  CHECK_THROWS(feedback_schedule(0.0, 15.0, 0.0, 0.0));
  CVector h = CVector::Ones(2);
  auto s = snapshot(h, 4.2);
  s.measurement_times = {3.0, 3.5, 4.0, 4.5, 5.0};
  CHECK(feedback_link(s, 0.1).time_s == doctest::Approx(5.1));
  CHECK_THROWS(feedback_link(s, -1.0));
}

TEST_CASE("zero-order hold keeps the latest delivery per terminal") {
  CsiHold hold;
  CVector a = CVector::Ones(2), b = 2.0 * CVector::Ones(2);
  hold.deliver({5.1, snapshot(a, 5.0, "ut1")});
  hold.deliver({5.1, snapshot(a, 5.0, "ut2")});
  hold.deliver({10.1, snapshot(b, 10.0, "ut1")});
  CHECK(hold.at(5.0).empty());
  auto rows = hold.at(7.0);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].h_est.entries(0, 0) == Complex(1.0, 0.0));
  rows = hold.at(12.0);
  CHECK(rows[0].ut_id == "ut1");
  CHECK(rows[0].h_est.entries(0, 0) == Complex(2.0, 0.0));
  CHECK(rows[1].h_est.entries(0, 0) == Complex(1.0, 0.0));
  CHECK_THROWS(hold.deliver({1.0, snapshot(a, 1.0)}));
  const auto H = assemble_channel(hold.at(12.0));
  CHECK(H.users() == 2);
  CHECK(H.satellites() == 2);
}

TEST_CASE("averaging: identity, cancellation and argument checks") {
  CVector h(2);
  h << Complex(1.0, 2.0), Complex(-0.5, 0.25);
  const auto single = average_snapshots({snapshot(h, 1.0)});
  CHECK(single.h_est.entries == snapshot(h, 1.0).h_est.entries);
  CHECK(single.n_averaged == 1);
  CVector e(2);
  e << Complex(0.1, -0.3), Complex(0.02, 0.2);
  const auto pair = average_snapshots({snapshot(h + e, 1.0), snapshot(h - e, 2.0)});
  CHECK((pair.h_est.entries.transpose() - h).norm() < 1e-15);
  CHECK(pair.n_averaged == 2);
  CHECK(pair.measurement_times == std::vector<double>{1.0, 2.0});
  CHECK_THROWS(average_snapshots({}));
  CHECK_THROWS(average_snapshots({snapshot(h, 1.0), snapshot(CVector::Ones(3), 2.0)}));
}

TEST_CASE("averaging five snapshots cuts the error variance five-fold") {
  const auto book = make_pilot_book(2, 2000);
  CVector h(2);
  h << Complex(0.8, 0.1), Complex(0.2, -0.6);
  const double s2 = 1.0;
  double single = 0.0, averaged = 0.0;
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(7000 + s);
    std::vector<CsiSnapshot> snaps;
    for (int m = 0; m < 5; ++m)
      snaps.push_back(snapshot(blue_estimate(received(book, h, s2, rng), book, s2).h, m));
    single += std::norm(snaps[0].h_est.entries(0, 0) - h(0));
    averaged += std::norm(average_snapshots(snaps).h_est.entries(0, 0) - h(0));
  }
  CHECK(single / averaged == doctest::Approx(5.0).epsilon(0.2));
}

TEST_CASE("successive snapshots of a static channel differ only by estimator noise") {
  const auto book = make_pilot_book(2, 2000);
  CVector h(2);
  h << Complex(0.5, 0.5), Complex(-0.4, 0.3);
  const double s2 = 0.2;
  std::mt19937_64 rng(55);
  auto averaged = [&]() {
    std::vector<CsiSnapshot> snaps;
    for (int m = 0; m < 5; ++m) snaps.push_back(snapshot(blue_estimate(received(book, h, s2, rng), book, s2).h, m));
    return average_snapshots(snaps);
  };
  double dist2 = 0.0;
  const int pairs = 200;
  auto prev = averaged();
  for (int i = 0; i < pairs; ++i) {
    auto next = averaged();
    dist2 += (next.h_est.entries - prev.h_est.entries).squaredNorm();
    prev = next;
  }
  const double predicted = 2.0 * 2.0 * s2 / (2000.0 * 5.0);  // two entries, two independent draws
  CHECK(dist2 / pairs == doctest::Approx(predicted).epsilon(0.2));
}

TEST_CASE("estimated CSI at 30 dB still nearly diagonalizes the channel") {
  const Scenario sc = parse_scenario("paper-trial");
  const auto budget = make_link_budget(build_channel_matrix(sc, 0.0).entries, {16.5, 10.9}, 0);
  const CMatrix& H = budget.channel;
  const auto book = make_pilot_book(2, 2000);
  std::mt19937_64 rng(3);
  std::vector<CsiSnapshot> rows;
  for (Eigen::Index k = 0; k < 2; ++k) {
    const CVector hk = H.row(k).transpose();
    const double noise = hk.squaredNorm() * db_to_linear(-30.0);
    auto s = snapshot(blue_estimate(received(book, hk, noise, rng), book, noise).h, 0.0, "ut" + std::to_string(k));
    rows.push_back(s);
  }
  const auto P = zf_precoder(assemble_channel(rows).entries);
  CMatrix d = CMatrix::Zero(2, 2);
  for (Eigen::Index k = 0; k < 2; ++k) d(k, k) = std::sqrt(P.lambda[static_cast<std::size_t>(k)]);
  CHECK((H * P.entries - d).norm() / d.norm() < 0.05);
}

}  // TEST_SUITE
