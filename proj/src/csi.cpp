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

#include "satmimo/csi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace satmimo {

PilotBook make_pilot_book(std::size_t n, std::size_t length, double bandwidth_hz) {
  if (length == 0 || length % 2 != 0) throw std::invalid_argument("pilot length must be even");
  if (n == 0 || n > length) throw std::invalid_argument("pilot count must be in [1, L]");
  PilotBook book;
  book.bandwidth_hz = bandwidth_hz;
  book.root = 1;
  book.shift = length / n;
  std::vector<Complex> base(length);
  // n^2 mod 2L keeps the argument small for long sequences.
  const std::uint64_t two_l = 2 * length;
  for (std::size_t i = 0; i < length; ++i) {
    const std::uint64_t q = (static_cast<std::uint64_t>(i) * i) % two_l;
    base[i] = unit_phasor(-kPi * static_cast<double>(q) / static_cast<double>(length));
  }
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<Complex> seq(length);
    const std::size_t off = s * book.shift;
    for (std::size_t i = 0; i < length; ++i) seq[i] = base[(i + off) % length];
    book.sequences.push_back(std::move(seq));
  }
  return book;
}

BlueEstimate blue_estimate(std::span<const Complex> received, const PilotBook& pilots,
                           double noise_var) {
  const std::size_t len = pilots.length();
  if (received.size() != len) throw std::invalid_argument("blue_estimate: length mismatch");
  BlueEstimate est;
  est.h.resize(static_cast<Eigen::Index>(pilots.sequences.size()));
  for (std::size_t n = 0; n < pilots.sequences.size(); ++n) {
    Complex acc{0.0, 0.0};
    const auto& s = pilots.sequences[n];
    for (std::size_t i = 0; i < len; ++i) acc += std::conj(s[i]) * received[i];
    est.h(static_cast<Eigen::Index>(n)) = acc / static_cast<double>(len);
  }
  est.error_variance = noise_var / static_cast<double>(len);
  return est;
}

CsiSnapshot average_snapshots(const std::vector<CsiSnapshot>& snapshots) {
  if (snapshots.empty()) throw std::invalid_argument("average_snapshots: empty list");
  CsiSnapshot out = snapshots.front();
  const auto& shape = out.h_est.entries;
  CMatrix sum = CMatrix::Zero(shape.rows(), shape.cols());
  out.measurement_times.clear();
  std::size_t count = 0;
  for (const auto& s : snapshots) {
    if (s.h_est.entries.rows() != shape.rows() || s.h_est.entries.cols() != shape.cols())
      throw std::invalid_argument("average_snapshots: shape mismatch");
    sum += s.h_est.entries * static_cast<double>(s.n_averaged);
    count += s.n_averaged;
    out.measurement_times.insert(out.measurement_times.end(), s.measurement_times.begin(),
                                 s.measurement_times.end());
  }
  std::sort(out.measurement_times.begin(), out.measurement_times.end());
  out.h_est.entries = sum / static_cast<double>(count);
  out.h_est.source = ChannelSource::estimated;
  out.h_est.timestamp_s = out.measurement_times.empty() ? snapshots.back().h_est.timestamp_s
                                                        : out.measurement_times.back();
  out.n_averaged = count;
  return out;
}

CsiDelivery feedback_link(const CsiSnapshot& snapshot, double latency_s) {
  if (latency_s < 0.0) throw std::invalid_argument("feedback latency must be >= 0");
  CsiDelivery d;
  const double end = snapshot.measurement_times.empty() ? snapshot.h_est.timestamp_s
                                                        : snapshot.measurement_times.back();
  d.time_s = end + latency_s;
  d.snapshot = snapshot;
  return d;
}

std::vector<double> feedback_schedule(double start_s, double end_s, double latency_s,
                                      double update_period_s) {
  if (latency_s < 0.0) throw std::invalid_argument("feedback latency must be >= 0");
  if (!(update_period_s > 0.0)) throw std::invalid_argument("update period must be > 0");
  std::vector<double> out;
  for (std::size_t i = 1;; ++i) {
    const double m = start_s + static_cast<double>(i) * update_period_s;
    if (m > end_s + 1e-9) break;
    out.push_back(m + latency_s);
  }
  return out;
}

void CsiHold::deliver(const CsiDelivery& d) {
  if (!log_.empty() && d.time_s < log_.back().time_s)
    throw std::invalid_argument("CSI deliveries must arrive in time order");
  log_.push_back(d);
}

std::vector<CsiSnapshot> CsiHold::at(double t) const {
  std::map<std::string, const CsiSnapshot*> latest;
  std::vector<std::string> order;
  for (const auto& d : log_) {
    if (d.time_s > t) break;
    if (!latest.count(d.snapshot.ut_id)) order.push_back(d.snapshot.ut_id);
    latest[d.snapshot.ut_id] = &d.snapshot;
  }
  std::vector<CsiSnapshot> out;
  for (const auto& id : order) out.push_back(*latest[id]);
  return out;
}

ChannelMatrix assemble_channel(const std::vector<CsiSnapshot>& rows) {
  if (rows.empty()) throw std::invalid_argument("assemble_channel: no rows");
  ChannelMatrix h;
  const Eigen::Index n = rows.front().h_est.entries.cols();
  Eigen::Index k = 0;
  for (const auto& r : rows) {
    if (r.h_est.entries.cols() != n) throw std::invalid_argument("assemble_channel: shape mismatch");
    k += r.h_est.entries.rows();
  }
  h.entries.resize(k, n);
  Eigen::Index at = 0;
  for (const auto& r : rows) {
    h.entries.middleRows(at, r.h_est.entries.rows()) = r.h_est.entries;
    at += r.h_est.entries.rows();
    h.timestamp_s = std::max(h.timestamp_s, r.h_est.timestamp_s);
    h.carrier_hz = r.h_est.carrier_hz;
  }
  h.source = ChannelSource::estimated;
  return h;
}

}  // namespace satmimo
