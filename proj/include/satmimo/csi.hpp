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

#include <span>
#include <string>
#include <vector>

#include "satmimo/channel.hpp"
#include "satmimo/common.hpp"

namespace satmimo {

/// Orthogonal pilot set: cyclic shifts of one Zadoff-Chu root.
struct PilotBook {
  std::vector<std::vector<Complex>> sequences;
  double bandwidth_hz = 200e3;
  int root = 1;
  std::size_t shift = 0;  // cyclic shift between consecutive sequences

  std::size_t length() const { return sequences.empty() ? 0 : sequences.front().size(); }
};

/// Throws std::invalid_argument for odd L, N == 0 or N > L.
PilotBook make_pilot_book(std::size_t n, std::size_t length, double bandwidth_hz = 200e3);

struct BlueEstimate {
  CVector h;                    // one entry per satellite
  double error_variance = 0.0;  // per entry
};

/// Correlation estimate <s_n, r> / L for every pilot of the book.
BlueEstimate blue_estimate(std::span<const Complex> received, const PilotBook& pilots,
                           double noise_var);

/// One user terminal's averaged channel-row measurement.
struct CsiSnapshot {
  ChannelMatrix h_est;  // 1 x N for a single terminal
  std::vector<double> measurement_times;
  std::size_t n_averaged = 1;
  std::string ut_id;
};

/// Entry-wise complex mean. Throws on an empty list or shape mismatch.
CsiSnapshot average_snapshots(const std::vector<CsiSnapshot>& snapshots);

struct CsiDelivery {
  double time_s = 0.0;
  CsiSnapshot snapshot;
};

/// Arrival of a snapshot at the gateway: last measurement time + latency.
CsiDelivery feedback_link(const CsiSnapshot& snapshot, double latency_s);

/// Delivery times for periodic updates over [start, end]: start + i*period + latency.
std::vector<double> feedback_schedule(double start_s, double end_s, double latency_s,
                                      double update_period_s);

/// Zero-order hold of delivered snapshots at the gateway.
class CsiHold {
 public:
  void deliver(const CsiDelivery& d);
  /// Latest snapshot per terminal delivered at or before t (empty if none).
  std::vector<CsiSnapshot> at(double t) const;

 private:
  std::vector<CsiDelivery> log_;
};

/// Stacks per-terminal rows into a K x N estimate, in the given order.
ChannelMatrix assemble_channel(const std::vector<CsiSnapshot>& rows);

}  // namespace satmimo
