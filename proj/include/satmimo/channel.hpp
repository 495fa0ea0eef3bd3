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

#include "satmimo/common.hpp"
#include "satmimo/scenario.hpp"

namespace satmimo {

enum class ChannelSource { geometric, estimated };

/// K x N complex downlink channel (rows: user terminals, columns: satellites).
struct ChannelMatrix {
  CMatrix entries;
  double carrier_hz = 0.0;
  double timestamp_s = 0.0;
  ChannelSource source = ChannelSource::geometric;

  Eigen::Index users() const { return entries.rows(); }
  Eigen::Index satellites() const { return entries.cols(); }
};

/// Free-space line-of-sight coefficient (c/(4 pi f d)) exp(-j 2 pi f d / c).
Complex los_coefficient(double distance_m, double freq_hz);

/// Geometric channel at time t (satellite motion time).
ChannelMatrix build_channel_matrix(const Scenario& scenario, double t);

/// R * H * T for diagonal unit-modulus T (N x N) and R (K x K).
CMatrix effective_channel(const CMatrix& H, const CMatrix& T, const CMatrix& R);

/// Ratio of largest to smallest singular value.
double condition_number(const CMatrix& m);

}  // namespace satmimo
