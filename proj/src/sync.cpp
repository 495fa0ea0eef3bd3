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

#include "satmimo/sync.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace satmimo {

namespace {

double grid_rate(std::span<const double> t_grid) {
  if (t_grid.size() < 2) return 0.0;
  const double dt = t_grid[1] - t_grid[0];
  if (!(dt > 0.0)) throw std::invalid_argument("time grid must be increasing");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double expect = t_grid[0] + static_cast<double>(i) * dt;
    if (std::abs(t_grid[i] - expect) > 1e-6 * dt + 1e-12 * std::abs(expect))
      throw std::invalid_argument("time grid must be uniform");
  }
  return 1.0 / dt;
}

Complex tone_at(double f, double t) {
  const double cycles = f * t;
  return unit_phasor(-kTwoPi * (cycles - std::floor(cycles)));
}

struct Moments {
  double mean = 0.0, var = 0.0, skew = 0.0, exkurt = 0.0;
};

template <typename Get>
Moments moments(std::size_t n, Get get) {
  Moments m;
  if (n == 0) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += get(i);
  m.mean = s / static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = get(i) - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  m.var = m2;
  if (m2 > 0.0) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.exkurt = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

}  // namespace

IqBuffer generate_reference_tone(double f_ref, std::span<const double> t_grid) {
  IqBuffer buf;
  const double fs = grid_rate(t_grid);
  if (fs > 0.0 && !(std::abs(f_ref) < fs / 2.0))
    throw std::invalid_argument("reference tone aliases on this grid");
  buf.sample_rate_hz = fs;
  buf.start_time_s = t_grid.empty() ? 0.0 : t_grid.front();
  buf.samples.reserve(t_grid.size());
  for (double t : t_grid) buf.samples.push_back(tone_at(f_ref, t));
  return buf;
}

IqBuffer generate_reference_tone(double f_ref, double sample_rate_hz, double start_time_s,
                                 std::size_t count) {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be > 0");
  if (!(std::abs(f_ref) < sample_rate_hz / 2.0))
    throw std::invalid_argument("reference tone aliases at this sample rate");
  IqBuffer buf;
  buf.sample_rate_hz = sample_rate_hz;
  buf.start_time_s = start_time_s;
  buf.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) buf.samples.push_back(tone_at(f_ref, buf.time_of(i)));
  return buf;
}

LoopGains loop_gains(const AdpllConfig& cfg) {
  if (!(cfg.loop_bandwidth_hz > 0.0) || !(cfg.damping > 0.0) || !(cfg.sample_rate_hz > 0.0))
    throw std::invalid_argument("loop bandwidth, damping and sample rate must be > 0");
  if (cfg.loop_bandwidth_hz > cfg.sample_rate_hz / 10.0)
    throw std::invalid_argument("loop bandwidth too large for the sample rate");
  const double zeta = cfg.damping;
  const double theta = cfg.loop_bandwidth_hz / cfg.sample_rate_hz / (zeta + 0.25 / zeta);
  const double d = 1.0 + 2.0 * zeta * theta + theta * theta;
  LoopGains g;
  g.proportional = 4.0 * zeta * theta / d;
  g.integral = 4.0 * theta * theta / d;
  g.fll = cfg.fll_time_constant_s > 0.0 ? 1.0 / (cfg.fll_time_constant_s * cfg.sample_rate_hz) : 0.0;
  return g;
}

Adpll::Adpll(const AdpllConfig& cfg) : cfg_(cfg), gains_(loop_gains(cfg)) {
  base_step_ = kTwoPi * cfg.nco_initial_freq_hz / cfg.sample_rate_hz;
  avg_alpha_ = 1.0 / std::max(1.0, cfg.lock_average_s * cfg.sample_rate_hz);
  dt_ = 1.0 / cfg.sample_rate_hz;
  st_.nco_freq_hz = cfg.nco_initial_freq_hz;
}

void Adpll::update(double error) {
  st_.integrator += gains_.integral * error;
  if (!st_.locked && gains_.fll > 0.0) st_.integrator += gains_.fll * wrap_phase(error - st_.last_error);
  st_.last_error = error;
  st_.nco_phase = wrap_phase(st_.nco_phase + base_step_ + st_.integrator + gains_.proportional * error);
  st_.nco_freq_hz = (base_step_ + st_.integrator) * cfg_.sample_rate_hz / kTwoPi;

  st_.error_average += avg_alpha_ * (std::abs(error) - st_.error_average);
  if (st_.error_average < cfg_.lock_threshold_rad) {
    st_.lock_timer_s += dt_;
    if (st_.lock_timer_s >= cfg_.lock_hold_s) st_.locked = true;
  } else {
    st_.lock_timer_s = 0.0;
    st_.locked = false;
  }
  st_.lock_confidence = std::clamp(1.0 - st_.error_average / cfg_.lock_threshold_rad, 0.0, 1.0);
}

Complex Adpll::step(Complex sample) {
  const Complex nco = unit_phasor(st_.nco_phase);
  update(std::arg(sample * std::conj(nco)));
  return nco;
}

double Adpll::step_phase(double input_phase) {
  const double e = wrap_phase(input_phase - st_.nco_phase);
  update(e);
  return e;
}

Complex adpll_step(Adpll& pll, Complex sample) { return pll.step(sample); }

PrecompEntry precompensation_entry(Complex pll_output, double f_ref, double t, bool locked) {
  PrecompEntry e;
  const Complex v = tone_at(f_ref, t) * std::conj(pll_output);
  e.value = v / std::abs(v);
  e.locked = locked;
  return e;
}

void ResidualPhaseAccumulator::add(double t, double phase_rad) {
  if (!has_ref_) {
    ref_ = phase_rad;
    has_ref_ = true;
  }
  t_.push_back(t);
  dev_.push_back(wrap_phase(phase_rad - ref_));
}

ResidualPhaseStats ResidualPhaseAccumulator::finalize(double bin_deg, std::size_t jb_stride) const {
  if (!(bin_deg > 0.0)) throw std::invalid_argument("histogram bin width must be > 0");
  ResidualPhaseStats st;
  const std::size_t n = dev_.size();
  if (n == 0) return st;
  st.samples_deg.reserve(n);
  for (double d : dev_) st.samples_deg.push_back(rad2deg(wrap_phase(ref_ + d)));

  const auto all = moments(n, [&](std::size_t i) { return dev_[i]; });
  st.mean_deg = rad2deg(wrap_phase(ref_ + all.mean));
  st.std_deg = rad2deg(std::sqrt(all.var));
  st.skewness = all.skew;
  st.excess_kurtosis = all.exkurt;

  jb_stride = std::max<std::size_t>(1, jb_stride);
  const std::size_t m = (n + jb_stride - 1) / jb_stride;
  const auto sub = moments(m, [&](std::size_t i) { return dev_[i * jb_stride]; });
  st.jb_samples = m;
  st.jarque_bera = static_cast<double>(m) / 6.0 * (sub.skew * sub.skew + 0.25 * sub.exkurt * sub.exkurt);

  double maxabs = 0.0;
  for (double d : dev_) maxabs = std::max(maxabs, std::abs(rad2deg(d - all.mean)));
  const auto half = static_cast<std::size_t>(std::max(0.0, std::ceil(maxabs / bin_deg - 0.5)));
  const std::size_t bins = 2 * half + 1;
  const double lo = -(static_cast<double>(half) + 0.5) * bin_deg;
  st.histogram.edges_deg.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) st.histogram.edges_deg[b] = lo + static_cast<double>(b) * bin_deg;
  std::vector<std::size_t> counts(bins, 0);
  for (double d : dev_) {
    const double x = rad2deg(d - all.mean);
    auto b = static_cast<long long>(std::floor((x - lo) / bin_deg));
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  st.histogram.probabilities.resize(bins);
  for (std::size_t b = 0; b < bins; ++b)
    st.histogram.probabilities[b] = static_cast<double>(counts[b]) / static_cast<double>(n);
  return st;
}

ResidualPhaseStats residual_phase(const std::vector<IqBuffer>& pll_outputs,
                                  const std::vector<IqBuffer>& references,
                                  const std::vector<double>& tone_hz, double tau_s, double bin_deg) {
  if (pll_outputs.size() < 2 || references.size() != pll_outputs.size() ||
      tone_hz.size() != pll_outputs.size())
    throw std::invalid_argument("residual_phase: need matching series for at least two satellites");
  const std::size_t len = references[0].samples.size();
  const double fs = references[0].sample_rate_hz;
  for (std::size_t n = 0; n < references.size(); ++n) {
    if (references[n].samples.size() != len || pll_outputs[n].samples.size() != len)
      throw std::invalid_argument("residual_phase: length mismatch");
    if (references[n].sample_rate_hz != fs || pll_outputs[n].sample_rate_hz != fs)
      throw std::invalid_argument("residual_phase: sample rate mismatch");
  }
  if (!(tau_s >= 0.0) || !(fs > 0.0)) throw std::invalid_argument("residual_phase: tau out of range");
  const double tau_samples = tau_s * fs;
  const auto d = static_cast<std::size_t>(std::llround(tau_samples));
  if (std::abs(tau_samples - static_cast<double>(d)) > 1e-6)
    throw std::invalid_argument("residual_phase: tau must be an integer number of samples");
  if (d >= len) throw std::invalid_argument("residual_phase: tau out of range");

  std::vector<Complex> advance;
  for (double f : tone_hz) advance.push_back(tone_at(f, tau_s));
  ResidualPhaseAccumulator acc;
  for (std::size_t i = d; i < len; ++i) {
    const Complex a = pll_outputs[0].samples[i - d] * std::conj(references[0].samples[i]) * advance[0];
    const Complex b = pll_outputs[1].samples[i - d] * std::conj(references[1].samples[i]) * advance[1];
    acc.add(references[0].time_of(i), std::arg(a * std::conj(b)));
  }
  return acc.finalize(bin_deg, std::max<std::size_t>(1, d));
}

double phase_error_from_freq_error(double df_hz, double tau_s) { return 360.0 * df_hz * tau_s; }

}  // namespace satmimo
