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
#include <limits>
#include <string>
#include <vector>

#include "satmimo/common.hpp"
#include "satmimo/impairments.hpp"

namespace satmimo {

using Vec3 = Eigen::Vector3d;

enum class StationRole { gateway, user_terminal };

struct GeodeticPosition {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_m = 0.0;
};

struct GroundStation {
  std::string id;
  GeodeticPosition position;
  StationRole role = StationRole::user_terminal;
  // Target SISO carrier-to-noise ratio for user terminals; the engine's link
  // budget turns it into the per-symbol noise variance.
  double cnr_db = 0.0;
  double noise_variance = 1.0;
};

/// Single-axis station-keeping model: the orbit radius oscillates
/// sinusoidally around mean_radius_m at a fixed longitude in the equatorial
/// plane.
struct SatelliteMotion {
  std::string id;
  double nominal_longitude_deg = 0.0;
  double mean_radius_m = kGeoRadius;
  double radial_amplitude_m = 0.0;
  double oscillation_period_s = 86400.0;
  double oscillation_phase_rad = 0.0;
};

struct CarrierPlan {
  std::vector<double> uplink_hz;          // one per satellite
  double downlink_hz = 11.5e9;
  std::vector<double> reference_tone_hz;  // one per satellite, sync-path baseband
  double symbol_rate = 1.25e6;
  double rolloff = 0.2;
};

struct ImpairmentConfig {
  std::vector<OscillatorTrajectory> converters;  // per satellite
  std::vector<OscillatorTrajectory> lnbs;        // per user terminal
  OscillatorTrajectory gateway;                  // phase noise only
  // Per-sample SNR of the received reference tones at the gateway.
  double tone_snr_db = std::numeric_limits<double>::infinity();
};

struct SyncSettings {
  double sample_rate_hz = 200e3;
  double loop_bandwidth_hz = 7.0;
  double damping = 0.707;
  double fll_time_constant_s = 0.2;  // 0 disables the acquisition aid
  double block_s = 0.01;
  double rtt_s = 0.25;
  double warmup_s = 3.0;
  std::vector<double> nco_initial_offset_hz;  // per satellite, seeds the NCOs
  double histogram_bin_deg = 0.546;
  std::size_t residual_decimation = 200;  // stored Δφ series decimation
};

struct CsiSettings {
  std::size_t pilot_length = 2000;
  double pilot_rate_hz = 200e3;
  double update_period_s = 5.0;
  std::size_t measurements_per_update = 5;
  double feedback_latency_s = 0.1;
  double pilot_snr_offset_db = 0.0;
  bool perfect = false;
  std::string replay_path;  // optional snapshot replay file
};

enum class SymbolModel { qpsk, gaussian };

struct EngineSettings {
  double metric_window_s = 0.01;
  double metric_interval_s = 0.5;
  SymbolModel symbol_model = SymbolModel::qpsk;
  double decode_threshold_db = 9.0;
  double propagation_s = 0.125;
  double start_epoch_s = 0.0;
  std::size_t active_satellite = 0;
  std::size_t served_stream = 0;
  std::size_t constellation_points = 2000;
};

struct Scenario {
  std::string name = "unnamed";
  double duration_s = 120.0;  // measurement span after sync warm-up
  std::uint64_t seed = 1;
  std::vector<GroundStation> stations;
  std::vector<SatelliteMotion> satellites;
  CarrierPlan carriers;
  ImpairmentConfig impairments;
  SyncSettings sync;
  CsiSettings csi;
  EngineSettings engine;

  const GroundStation& gateway() const;
  std::vector<const GroundStation*> user_terminals() const;
  std::size_t num_satellites() const { return satellites.size(); }
  std::size_t num_user_terminals() const;
};

bool operator==(const GeodeticPosition&, const GeodeticPosition&);
bool operator==(const GroundStation&, const GroundStation&);
bool operator==(const SatelliteMotion&, const SatelliteMotion&);
bool operator==(const CarrierPlan&, const CarrierPlan&);
bool operator==(const ImpairmentConfig&, const ImpairmentConfig&);
bool operator==(const SyncSettings&, const SyncSettings&);
bool operator==(const CsiSettings&, const CsiSettings&);
bool operator==(const EngineSettings&, const EngineSettings&);
bool operator==(const Scenario&, const Scenario&);

// ---- geometry -------------------------------------------------------------

/// Spherical-earth geodetic -> ECEF.
Vec3 station_ecef(const GeodeticPosition& pos);

Vec3 satellite_position(const SatelliteMotion& sat, double t);
Vec3 satellite_velocity(const SatelliteMotion& sat, double t);

double slant_range(const GroundStation& station, const SatelliteMotion& sat, double t);

/// d/dt of slant_range, analytic. Positive means the satellite recedes.
double radial_velocity(const GroundStation& station, const SatelliteMotion& sat, double t);

/// Relativistic Doppler offset from nominal, f*(sqrt((c-v)/(c+v)) - 1), for a
/// receding-positive line-of-sight velocity v. Throws std::invalid_argument
/// for |v| >= c.
double doppler_offset(double f, double v);

/// Combined uplink+downlink Doppler offset seen on satellite n's loop through
/// the gateway at time t (t includes the scenario epoch).
double loop_doppler(const Scenario& scenario, std::size_t n, double t);

}  // namespace satmimo
