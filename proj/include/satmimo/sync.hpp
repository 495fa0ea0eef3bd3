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

#include <cstddef>
#include <span>
#include <vector>

#include "satmimo/common.hpp"

namespace satmimo {

/// Uniformly sampled complex baseband segment.
struct IqBuffer {
  std::vector<Complex> samples;
  double sample_rate_hz = 0.0;
  double start_time_s = 0.0;

  double time_of(std::size_t i) const { return start_time_s + static_cast<double>(i) / sample_rate_hz; }
};

/// exp(-j 2 pi f t) on the given uniform grid. The phase depends on absolute
/// time only, so consecutive segments join continuously.
IqBuffer generate_reference_tone(double f_ref, std::span<const double> t_grid);
IqBuffer generate_reference_tone(double f_ref, double sample_rate_hz, double start_time_s,
                                 std::size_t count);

struct AdpllConfig {
  double loop_bandwidth_hz = 7.0;  // one-sided noise bandwidth B_L
  double damping = 0.707;
  double sample_rate_hz = 200e3;
  double nco_initial_freq_hz = 0.0;  // signed, same sense as the tracked tone
  // Frequency-discriminator aid used only while unlocked; 0 disables it.
  double fll_time_constant_s = 0.2;
  double lock_threshold_rad = 0.1;
  double lock_hold_s = 0.5;
  double lock_average_s = 0.05;
};

struct AdpllState {
  double nco_phase = 0.0;   // rad, wrapped to [-pi, pi)
  double nco_freq_hz = 0.0;
  double integrator = 0.0;  // rad/sample on top of the initial NCO step
  double last_error = 0.0;
  double error_average = kPi / 2.0;
  double lock_timer_s = 0.0;
  bool locked = false;
  double lock_confidence = 0.0;  // 1 - average|error|/threshold, clamped to [0, 1]
};

struct LoopGains {
  double proportional = 0.0;
  double integral = 0.0;
  double fll = 0.0;
};

/// Proportional/integral gains of the type-II loop for (B_L, zeta, fs).
LoopGains loop_gains(const AdpllConfig& cfg);

/// Second-order type-II all-digital PLL with a lock detector.
class Adpll {
 public:
  explicit Adpll(const AdpllConfig& cfg);

  /// Processes one input sample and returns the NCO sample it was compared with.
  Complex step(Complex sample);

  /// Phase-domain version of step for a unit-modulus input of phase
  /// input_phase. Returns the phase detector output.
  double step_phase(double input_phase);

  const AdpllState& state() const { return st_; }
  const AdpllConfig& config() const { return cfg_; }
  double frequency_hz() const { return st_.nco_freq_hz; }

 private:
  void update(double error);

  AdpllConfig cfg_;
  LoopGains gains_;
  AdpllState st_;
  double base_step_ = 0.0;  // rad/sample from nco_initial_freq_hz
  double avg_alpha_ = 0.0;
  double dt_ = 0.0;
};

/// Free-function form of one loop iteration. Returns the NCO output sample.
Complex adpll_step(Adpll& pll, Complex sample);

struct PrecompEntry {
  Complex value{1.0, 0.0};
  bool locked = true;
};

/// exp(-j 2 pi f_ref t) * conj(pll_output): the transmit-side counter-rotation
/// for one satellite chain.
PrecompEntry precompensation_entry(Complex pll_output, double f_ref, double t, bool locked = true);

struct Histogram {
  std::vector<double> edges_deg;
  std::vector<double> probabilities;
};

struct ResidualPhaseStats {
  std::vector<double> samples_deg;  // as measured, not mean-removed
  double mean_deg = 0.0;
  double std_deg = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double jarque_bera = 0.0;   // on samples spaced by the loop delay
  std::size_t jb_samples = 0;
  Histogram histogram;
};

/// Streaming collector for an inter-satellite residual phase series.
/// Unwrapping is done against the first sample so a series centred near
/// +-180 degrees does not split.
class ResidualPhaseAccumulator {
 public:
  void add(double t, double phase_rad);
  std::size_t size() const { return dev_.size(); }
  const std::vector<double>& times() const { return t_; }

  /// bin_deg histogram width; jb_stride keeps every jb_stride-th sample for
  /// the normality statistic.
  ResidualPhaseStats finalize(double bin_deg, std::size_t jb_stride) const;

 private:
  bool has_ref_ = false;
  double ref_ = 0.0;
  std::vector<double> t_;
  std::vector<double> dev_;  // deviation from ref, rad
};

/// Inter-satellite residual phase from per-satellite PLL outputs and received
/// tones (satellites 0 and 1). tone_hz removes the known tone advance over
/// the delay so that a perfect loop yields exactly zero.
ResidualPhaseStats residual_phase(const std::vector<IqBuffer>& pll_outputs,
                                  const std::vector<IqBuffer>& references,
                                  const std::vector<double>& tone_hz, double tau_s,
                                  double bin_deg = 0.546);

/// Phase mismatch in degrees caused by a frequency error df over delay tau.
double phase_error_from_freq_error(double df_hz, double tau_s);

}  // namespace satmimo
