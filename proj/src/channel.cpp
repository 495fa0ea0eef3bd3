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

#include "satmimo/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace satmimo {

Complex los_coefficient(double distance_m, double freq_hz) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("los_coefficient: distance must be > 0");
  if (!(freq_hz > 0.0)) throw std::invalid_argument("los_coefficient: frequency must be > 0");
  const double mag = kSpeedOfLight / (4.0 * kPi * freq_hz * distance_m);
  // Reduce the cycle count before scaling by 2 pi to keep the phase exact.
  const double cycles = freq_hz * distance_m / kSpeedOfLight;
  const double frac = cycles - std::floor(cycles);
  return std::polar(mag, -kTwoPi * frac);
}

ChannelMatrix build_channel_matrix(const Scenario& scenario, double t) {
  const auto uts = scenario.user_terminals();
  const auto k = static_cast<Eigen::Index>(uts.size());
  const auto n = static_cast<Eigen::Index>(scenario.satellites.size());
  ChannelMatrix h;
  h.entries.resize(k, n);
  h.carrier_hz = scenario.carriers.downlink_hz;
  h.timestamp_s = t;
  h.source = ChannelSource::geometric;
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      h.entries(r, c) = los_coefficient(
          slant_range(*uts[static_cast<std::size_t>(r)], scenario.satellites[static_cast<std::size_t>(c)], t),
          h.carrier_hz);
  return h;
}

CMatrix effective_channel(const CMatrix& H, const CMatrix& T, const CMatrix& R) {
  if (T.rows() != T.cols() || R.rows() != R.cols() || T.rows() != H.cols() ||
      R.rows() != H.rows())
    throw std::invalid_argument("effective_channel: dimension mismatch");
  return R * H * T;
}

double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double lo = s(s.size() - 1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

}  // namespace satmimo
