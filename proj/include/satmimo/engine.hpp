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

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "satmimo/csi.hpp"
#include "satmimo/precoder.hpp"
#include "satmimo/scenario.hpp"
#include "satmimo/sync.hpp"

namespace satmimo {

enum class Mode { siso, mimo, uncoordinated };

std::string mode_name(Mode m);
/// Accepts siso, mimo, mimo-precoded, uncoordinated, uncoordinated-ffr.
Mode parse_mode(const std::string& s);

// ---- event queue ------------------------------------------------------------

/// Declaration order is the tie-break priority for equal timestamps.
enum class EventType { pll_block = 0, pilot_slot = 1, csi_delivery = 2, precoder_update = 3, metric_window = 4 };

std::string event_name(EventType t);

using SimTime = std::int64_t;  // nanoseconds
inline SimTime to_ns(double s) { return static_cast<SimTime>(std::llround(s * 1e9)); }
inline double to_s(SimTime ns) { return static_cast<double>(ns) * 1e-9; }

struct Event {
  SimTime time = 0;
  EventType type = EventType::pll_block;
  std::uint64_t seq = 0;
  std::size_t payload = 0;
};

class EventQueue {
 public:
  void push(SimTime time, EventType type, std::size_t payload = 0);
  /// Throws std::logic_error when asked to schedule into the past.
  Event pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime now() const { return now_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
  SimTime now_ = 0;
};

struct ScheduledEvent {
  double time_s = 0.0;
  EventType type = EventType::pll_block;
  // Latest state timestamp the event may observe.
  double source_time_s = 0.0;
};

/// Follow-up events implied by a delay model:
///  pll_block at t      -> its estimate drives transmissions at t + rtt;
///  pilot_slot ending t -> csi_delivery at t + propagation + feedback_latency,
///                         precoder_update one propagation later.
/// Throws std::invalid_argument for negative delays.
std::vector<ScheduledEvent> schedule_delays(EventType type, double t, double propagation_s,
                                            double rtt_s, double feedback_latency_s = 0.0);

// ---- link budget ------------------------------------------------------------

struct LinkBudget {
  std::vector<double> cnr_db;          // per UT, single-satellite reference
  double path_scale = 1.0;             // applied to the geometric channel
  std::vector<double> noise_variance;  // per UT
  CMatrix channel;                     // normalized K x N channel
};

/// Normalizes the geometric channel so |H(0, active)| = 1 and sets each UT's
/// noise so that reception from the active satellite alone hits its CNR.
LinkBudget make_link_budget(const CMatrix& h_geo, const std::vector<double>& cnr_db,
                            std::size_t active_satellite);

// ---- reports ----------------------------------------------------------------

struct WindowRecord {
  double t = 0.0;
  bool zf_active = false;
  bool counted = false;
  std::vector<std::vector<double>> mer_db;  // [ut][stream]
  std::vector<int> decoded;                 // [ut], -1 when nothing decodes
  std::vector<double> leakage_db;           // [ut]
};

struct PllSample {
  double t = 0.0;
  std::vector<double> estimated_offset_hz;  // chain offset estimate per satellite
  std::vector<double> true_offset_hz;
  std::vector<bool> locked;
};

struct ImpairmentSample {
  double t = 0.0;
  std::vector<double> converter_hz;  // without Doppler
  std::vector<double> doppler_hz;
  std::vector<double> lnb_hz;
};

struct LockEvent {
  double t = 0.0;
  std::size_t satellite = 0;
  bool locked = false;
};

struct UtReport {
  std::string id;
  int intended_stream = 0;
  double mer_db = 0.0;           // intended stream, aggregated over counted windows
  double decode_fraction = 0.0;  // share of counted windows decoding the intended stream
  int decoded_stream = -1;       // most frequent decode result
  double leakage_db = -300.0;    // mean analytic cross-stream leakage
  double rate = 0.0;             // credited bit/s/Hz
  double predicted_gain_db = 0.0;
};

struct PrecoderRecord {
  double t = 0.0;
  PrecodingMatrix precoder;
  std::string note;
};

struct MetricsReport {
  std::string scenario_name;
  std::string config_hash;
  std::uint64_t seed = 0;
  Mode mode = Mode::siso;
  double duration_s = 0.0;
  std::vector<UtReport> uts;
  std::vector<double> per_user_rate;
  double sum_rate = 0.0;
  std::size_t windows_counted = 0;
  ResidualPhaseStats residual;
  std::vector<double> residual_times;
  std::vector<LockEvent> lock_timeline;
  std::vector<WindowRecord> windows;
  std::vector<PllSample> pll_series;
  std::vector<ImpairmentSample> impairment_series;
  std::vector<std::vector<Complex>> constellations;  // [ut], normalized
  std::vector<CsiSnapshot> csi_snapshots;
  std::vector<double> csi_delivery_times;
  std::vector<PrecoderRecord> precoders;
};

struct RunOptions {
  std::optional<double> duration_s;
  std::optional<std::uint64_t> seed;
  // Optional CSI replay: per delivery time, one snapshot per UT.
  std::vector<CsiDelivery> replay;
};

/// Runs one closed-loop simulation. Throws SimulationAborted when a loop is
/// unlocked at the end of warm-up.
MetricsReport run(const Scenario& scenario, Mode mode, const RunOptions& options = {});

struct ComparisonSummary {
  std::vector<std::string> ut_ids;
  std::vector<double> mer_delta_db;
  std::vector<std::string> decode_transition;  // e.g. "stream 1 -> stream 2"
  double rate_reference = 0.0;
  double rate_candidate = 0.0;
  double rate_ratio = 0.0;
};

/// Candidate relative to reference. Throws std::invalid_argument when the
/// reports come from different scenarios or seeds.
ComparisonSummary compare_modes(const MetricsReport& reference, const MetricsReport& candidate);

}  // namespace satmimo
