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

#include "satmimo/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace satmimo {

bool operator==(const GeodeticPosition& a, const GeodeticPosition& b) {
  return a.latitude_deg == b.latitude_deg && a.longitude_deg == b.longitude_deg &&
         a.altitude_m == b.altitude_m;
}
bool operator==(const GroundStation& a, const GroundStation& b) {
  return a.id == b.id && a.position == b.position && a.role == b.role && a.cnr_db == b.cnr_db &&
         a.noise_variance == b.noise_variance;
}
bool operator==(const SatelliteMotion& a, const SatelliteMotion& b) {
  return a.id == b.id && a.nominal_longitude_deg == b.nominal_longitude_deg &&
         a.mean_radius_m == b.mean_radius_m && a.radial_amplitude_m == b.radial_amplitude_m &&
         a.oscillation_period_s == b.oscillation_period_s &&
         a.oscillation_phase_rad == b.oscillation_phase_rad;
}
bool operator==(const CarrierPlan& a, const CarrierPlan& b) {
  return a.uplink_hz == b.uplink_hz && a.downlink_hz == b.downlink_hz &&
         a.reference_tone_hz == b.reference_tone_hz && a.symbol_rate == b.symbol_rate &&
         a.rolloff == b.rolloff;
}
bool operator==(const ImpairmentConfig& a, const ImpairmentConfig& b) {
  return a.converters == b.converters && a.lnbs == b.lnbs && a.gateway == b.gateway &&
         (a.tone_snr_db == b.tone_snr_db ||
          (std::isnan(a.tone_snr_db) && std::isnan(b.tone_snr_db)));
}
bool operator==(const SyncSettings& a, const SyncSettings& b) {
  return a.sample_rate_hz == b.sample_rate_hz && a.loop_bandwidth_hz == b.loop_bandwidth_hz &&
         a.damping == b.damping && a.fll_time_constant_s == b.fll_time_constant_s &&
         a.block_s == b.block_s && a.rtt_s == b.rtt_s && a.warmup_s == b.warmup_s &&
         a.nco_initial_offset_hz == b.nco_initial_offset_hz &&
         a.histogram_bin_deg == b.histogram_bin_deg &&
         a.residual_decimation == b.residual_decimation;
}
bool operator==(const CsiSettings& a, const CsiSettings& b) {
  return a.pilot_length == b.pilot_length && a.pilot_rate_hz == b.pilot_rate_hz &&
         a.update_period_s == b.update_period_s &&
         a.measurements_per_update == b.measurements_per_update &&
         a.feedback_latency_s == b.feedback_latency_s &&
         a.pilot_snr_offset_db == b.pilot_snr_offset_db && a.perfect == b.perfect &&
         a.replay_path == b.replay_path;
}
bool operator==(const EngineSettings& a, const EngineSettings& b) {
  return a.metric_window_s == b.metric_window_s && a.metric_interval_s == b.metric_interval_s &&
         a.symbol_model == b.symbol_model && a.decode_threshold_db == b.decode_threshold_db &&
         a.propagation_s == b.propagation_s && a.start_epoch_s == b.start_epoch_s &&
         a.active_satellite == b.active_satellite && a.served_stream == b.served_stream &&
         a.constellation_points == b.constellation_points;
}
bool operator==(const Scenario& a, const Scenario& b) {
  return a.name == b.name && a.duration_s == b.duration_s && a.seed == b.seed &&
         a.stations == b.stations && a.satellites == b.satellites && a.carriers == b.carriers &&
         a.impairments == b.impairments && a.sync == b.sync && a.csi == b.csi &&
         a.engine == b.engine;
}

const GroundStation& Scenario::gateway() const {
  for (const auto& s : stations)
    if (s.role == StationRole::gateway) return s;
  throw std::logic_error("scenario has no gateway");
}

std::vector<const GroundStation*> Scenario::user_terminals() const {
  std::vector<const GroundStation*> out;
  for (const auto& s : stations)
    if (s.role == StationRole::user_terminal) out.push_back(&s);
  return out;
}

std::size_t Scenario::num_user_terminals() const {
  std::size_t k = 0;
  for (const auto& s : stations) k += s.role == StationRole::user_terminal ? 1 : 0;
  return k;
}

Vec3 station_ecef(const GeodeticPosition& pos) {
  const double lat = deg2rad(pos.latitude_deg);
  const double lon = deg2rad(pos.longitude_deg);
  const double r = kEarthRadius + pos.altitude_m;
  return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon), r * std::sin(lat)};
}

namespace {
double orbit_radius(const SatelliteMotion& sat, double t) {
  return sat.mean_radius_m +
         sat.radial_amplitude_m *
             std::sin(kTwoPi * t / sat.oscillation_period_s + sat.oscillation_phase_rad);
}
double orbit_radius_rate(const SatelliteMotion& sat, double t) {
  const double w = kTwoPi / sat.oscillation_period_s;
  return sat.radial_amplitude_m * w * std::cos(w * t + sat.oscillation_phase_rad);
}
}  // namespace

Vec3 satellite_position(const SatelliteMotion& sat, double t) {
  const double lon = deg2rad(sat.nominal_longitude_deg);
  const double r = orbit_radius(sat, t);
  return {r * std::cos(lon), r * std::sin(lon), 0.0};
}

Vec3 satellite_velocity(const SatelliteMotion& sat, double t) {
  const double lon = deg2rad(sat.nominal_longitude_deg);
  const double rd = orbit_radius_rate(sat, t);
  return {rd * std::cos(lon), rd * std::sin(lon), 0.0};
}

double slant_range(const GroundStation& station, const SatelliteMotion& sat, double t) {
  return (satellite_position(sat, t) - station_ecef(station.position)).norm();
}

double radial_velocity(const GroundStation& station, const SatelliteMotion& sat, double t) {
  const Vec3 los = satellite_position(sat, t) - station_ecef(station.position);
  return los.dot(satellite_velocity(sat, t)) / los.norm();
}

double doppler_offset(double f, double v) {
  if (!(std::abs(v) < kSpeedOfLight))
    throw std::invalid_argument("doppler_offset: |v| must be below the speed of light");
  // sqrt((c-v)/(c+v)) - 1 written to avoid cancellation for small v.
  const double beta = v / kSpeedOfLight;
  const double ratio = std::sqrt((1.0 - beta) / (1.0 + beta));
  return f * (-2.0 * beta / (1.0 + beta)) / (ratio + 1.0);
}

double loop_doppler(const Scenario& scenario, std::size_t n, double t) {
  const auto& sat = scenario.satellites.at(n);
  const double v = radial_velocity(scenario.gateway(), sat, t);
  const double f = scenario.carriers.uplink_hz.at(n) + scenario.carriers.downlink_hz;
  return doppler_offset(f, v);
}

}  // namespace satmimo
