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

// Independent reference computations used by the tests. Deliberately written
// without the library's helpers so that agreement means something.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

constexpr long double kC = 299792458.0L;
constexpr long double kPiL = 3.141592653589793238462643383279502884L;

inline std::array<long double, 3> ecef(long double lat_deg, long double lon_deg, long double alt_m) {
  const long double r = 6378137.0L + alt_m;
  const long double la = lat_deg * kPiL / 180.0L;
  const long double lo = lon_deg * kPiL / 180.0L;
  return {r * std::cos(la) * std::cos(lo), r * std::cos(la) * std::sin(lo), r * std::sin(la)};
}

inline long double distance(const std::array<long double, 3>& a, const std::array<long double, 3>& b) {
  const long double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Exact relativistic offset, evaluated in extended precision.
inline long double doppler(long double f, long double v) {
  return f * (std::sqrt((kC - v) / (kC + v)) - 1.0L);
}

// Singular values of a 2x2 complex matrix from the eigenvalues of M^H M.
inline std::array<double, 2> singular_values_2x2(const Eigen::Matrix2cd& m) {
  const Eigen::Matrix2cd g = m.adjoint() * m;
  const double a = g(0, 0).real(), d = g(1, 1).real();
  const double b2 = std::norm(g(0, 1));
  const double half_tr = 0.5 * (a + d);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b2));
  return {std::sqrt(half_tr + disc), std::sqrt(std::max(0.0, half_tr - disc))};
}

// Trapezoidal integral of 2*pi*f over a uniform grid, in rad.
template <class F>
double trapezoid_phase(F f_hz, double t0, double t1, std::size_t steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  double acc = 0.5 * (f_hz(t0) + f_hz(t1));
  for (std::size_t i = 1; i < steps; ++i) acc += f_hz(t0 + h * static_cast<double>(i));
  return 2.0 * 3.14159265358979323846 * acc * h;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size());
  return m;
}

inline Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = {n(rng), n(rng)};
  return m;
}

}  // namespace oracle
