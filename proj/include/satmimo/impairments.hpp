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
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "satmimo/common.hpp"

namespace satmimo {

/// Sudden frequency change of an oscillator (e.g. a fault injection).
struct FrequencyStep {
  double time_s = 0.0;
  double delta_hz = 0.0;
  friend bool operator==(const FrequencyStep&, const FrequencyStep&) = default;
};

/// Parameters of one free-running conversion chain.
struct OscillatorTrajectory {
  double static_offset_hz = 0.0;
  double drift_rate_hz_per_s = 0.0;
  double random_walk_hz2_per_s = 0.0;  // Wiener frequency noise intensity
  double linewidth_hz = 0.0;           // Wiener phase noise
  std::uint64_t seed = 0;
  std::vector<FrequencyStep> steps;
  friend bool operator==(const OscillatorTrajectory&, const OscillatorTrajectory&) = default;
};

/// Stateful realization of an OscillatorTrajectory.
///
/// The stochastic parts (Wiener frequency and Wiener phase) live on a fixed
/// 1 ms internal grid and are linearly interpolated in between. An optional
/// external frequency contribution (Doppler) is sampled on the same grid.
/// The accumulated phase is 2*pi times the exact integral of the resulting
/// piecewise-linear frequency plus the Wiener phase, so results do not
/// depend on the caller's sample grid. The grid is extended lazily and in
/// order, which keeps realizations deterministic per seed.
class OscillatorProcess {
 public:
  static constexpr double kGridStep = 1e-3;

  using ExternalOffset = std::function<double(double)>;

  explicit OscillatorProcess(OscillatorTrajectory traj, std::uint64_t stream_seed = 0,
                             ExternalOffset external = {});

  const OscillatorTrajectory& trajectory() const { return traj_; }

  /// Frequency offset in Hz at time t >= 0 (including the external part).
  double instantaneous_offset(double t);

  /// The external (Doppler) part of instantaneous_offset, as gridded.
  double external_offset(double t);

  /// Accumulated phase in rad at time t >= 0; phase(0) == 0.
  double phase_at(double t);

  /// Phases on a uniform, increasing grid. Throws std::invalid_argument for
  /// non-uniform grids or grids that step back behind the previous call.
  std::vector<double> phase_sample(std::span<const double> t_grid);

  /// Releases internal grid storage older than t; later queries must not
  /// precede t.
  void discard_before(double t);

 private:
  void extend_to(std::size_t index);
  double deterministic_offset(double t) const;
  double deterministic_integral(double t) const;  // ∫0^t in Hz*s

  OscillatorTrajectory traj_;
  ExternalOffset external_;
  bool stochastic_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};

  std::size_t base_ = 0;         // grid index of element 0 in the vectors below
  std::vector<double> wfreq_;    // Wiener frequency at grid points
  std::vector<double> freq_;     // Wiener + external frequency at grid points
  std::vector<double> integral_; // ∫0^{t_i} of the gridded frequency
  std::vector<double> wphase_;   // Wiener phase at grid points
  double wiener_freq_ = 0.0;
  double last_query_ = 0.0;
};

/// All oscillators of one scenario run.
struct ImpairmentState {
  std::vector<OscillatorProcess> converters;  // N satellite chains
  std::vector<OscillatorProcess> lnbs;        // K user terminals
  OscillatorProcess gateway{OscillatorTrajectory{}};
};

/// Builds all processes for a configuration. Stream seeds are derived from
/// master_seed so that distinct oscillators never share a realization.
/// converter_externals, if non-empty, must have one entry per converter.
ImpairmentState make_impairment_state(
    const std::vector<OscillatorTrajectory>& converters,
    const std::vector<OscillatorTrajectory>& lnbs, const OscillatorTrajectory& gateway,
    std::uint64_t master_seed,
    std::vector<OscillatorProcess::ExternalOffset> converter_externals = {});

/// T(t) = diag(exp(-j*theta_n(t))) using each converter's accumulated phase
/// (which carries Doppler if the process was built with it).
CMatrix build_T(ImpairmentState& state, double t);

/// Same, with an additional constant per-satellite Doppler offset over [0, t].
CMatrix build_T(ImpairmentState& state, std::span<const double> doppler_hz, double t);

/// R(t) = diag(exp(-j*phi_k(t))) from the LNB trajectories.
CMatrix build_R(ImpairmentState& state, double t);

/// Deterministic 64-bit seed mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace satmimo
