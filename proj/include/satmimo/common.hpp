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

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace satmimo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;   // m/s
inline constexpr double kEarthRadius = 6'378'137.0;      // m, spherical model
inline constexpr double kGeoRadius = 42'164'000.0;       // m

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps to [-pi, pi).
inline double wrap_phase(double x) {
  double y = std::fmod(x + kPi, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  return y - kPi;
}

inline Complex unit_phasor(double phase) { return {std::cos(phase), std::sin(phase)}; }

/// Thrown when a matrix is too ill-conditioned for zero-forcing.
class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when the closed-loop simulation cannot continue (e.g. PLL never locks).
class SimulationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace satmimo
