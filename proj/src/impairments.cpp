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

#include "satmimo/impairments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace satmimo {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

OscillatorProcess::OscillatorProcess(OscillatorTrajectory traj, std::uint64_t stream_seed,
                                     ExternalOffset external)
    : traj_(std::move(traj)),
      external_(std::move(external)),
      stochastic_(traj_.random_walk_hz2_per_s > 0.0 || traj_.linewidth_hz > 0.0),
      rng_(mix_seed(traj_.seed, stream_seed)) {
  if (traj_.random_walk_hz2_per_s < 0.0 || traj_.linewidth_hz < 0.0)
    throw std::invalid_argument("oscillator noise coefficients must be non-negative");
  std::sort(traj_.steps.begin(), traj_.steps.end(),
            [](const FrequencyStep& a, const FrequencyStep& b) { return a.time_s < b.time_s; });
  const double ext0 = external_ ? external_(0.0) : 0.0;
  wfreq_.push_back(0.0);
  freq_.push_back(ext0);
  integral_.push_back(0.0);
  wphase_.push_back(0.0);
}

void OscillatorProcess::extend_to(std::size_t index) {
  const double sig_f = std::sqrt(traj_.random_walk_hz2_per_s * kGridStep);
  const double sig_p = std::sqrt(kTwoPi * traj_.linewidth_hz * kGridStep);
  double wphase = wphase_.back();
  while (base_ + freq_.size() <= index) {
    const std::size_t i = base_ + freq_.size();
    if (stochastic_) {
      const double n1 = normal_(rng_);
      const double n2 = normal_(rng_);
      wiener_freq_ += sig_f * n1;
      wphase += sig_p * n2;
    }
    const double f = wiener_freq_ + (external_ ? external_(static_cast<double>(i) * kGridStep) : 0.0);
    integral_.push_back(integral_.back() + 0.5 * kGridStep * (freq_.back() + f));
    wfreq_.push_back(wiener_freq_);
    freq_.push_back(f);
    wphase_.push_back(wphase);
  }
}

double OscillatorProcess::deterministic_offset(double t) const {
  double f = traj_.static_offset_hz + traj_.drift_rate_hz_per_s * t;
  for (const auto& s : traj_.steps) {
    if (s.time_s > t) break;
    f += s.delta_hz;
  }
  return f;
}

double OscillatorProcess::deterministic_integral(double t) const {
  double v = traj_.static_offset_hz * t + 0.5 * traj_.drift_rate_hz_per_s * t * t;
  for (const auto& s : traj_.steps) {
    if (s.time_s >= t) break;
    v += s.delta_hz * (t - std::max(0.0, s.time_s));
  }
  return v;
}

namespace {
struct GridPos {
  std::size_t i;
  double frac;
};
GridPos locate(double t, double h) {
  const double x = t / h;
  const double fl = std::floor(x);
  return {static_cast<std::size_t>(fl), x - fl};
}
}  // namespace

double OscillatorProcess::instantaneous_offset(double t) {
  if (t < 0.0) throw std::invalid_argument("oscillator queried at negative time");
  const auto [i, frac] = locate(t, kGridStep);
  extend_to(i + 1);
  if (i < base_) throw std::logic_error("oscillator queried before discarded history");
  const std::size_t k = i - base_;
  const double f = freq_[k] + frac * (freq_[k + 1] - freq_[k]);
  return deterministic_offset(t) + f;
}

double OscillatorProcess::external_offset(double t) {
  if (!external_) return 0.0;
  const auto [i, frac] = locate(t, kGridStep);
  extend_to(i + 1);
  if (i < base_) throw std::logic_error("oscillator queried before discarded history");
  const std::size_t k = i - base_;
  const double a = freq_[k] - wfreq_[k];
  const double b = freq_[k + 1] - wfreq_[k + 1];
  return a + frac * (b - a);
}

double OscillatorProcess::phase_at(double t) {
  if (t < 0.0) throw std::invalid_argument("oscillator queried at negative time");
  const auto [i, frac] = locate(t, kGridStep);
  extend_to(i + 1);
  if (i < base_) throw std::logic_error("oscillator queried before discarded history");
  const std::size_t k = i - base_;
  const double s = frac * kGridStep;
  const double df = freq_[k + 1] - freq_[k];
  const double stoch = integral_[k] + freq_[k] * s + 0.5 * df * s * frac;
  const double wp = wphase_[k] + frac * (wphase_[k + 1] - wphase_[k]);
  return kTwoPi * (deterministic_integral(t) + stoch) + wp;
}

std::vector<double> OscillatorProcess::phase_sample(std::span<const double> t_grid) {
  std::vector<double> out;
  if (t_grid.empty()) return out;
  if (t_grid.front() < last_query_ - 1e-12)
    throw std::invalid_argument("phase_sample grid steps back behind the previous call");
  if (t_grid.size() > 1) {
    const double dt = t_grid[1] - t_grid[0];
    if (!(dt > 0.0)) throw std::invalid_argument("phase_sample grid must be increasing");
    const double tol = 1e-6 * dt;
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
      const double expect = t_grid[0] + static_cast<double>(i) * dt;
      if (std::abs(t_grid[i] - expect) > tol + 1e-12 * std::abs(expect))
        throw std::invalid_argument("phase_sample grid must be uniform");
    }
  }
  out.reserve(t_grid.size());
  for (double t : t_grid) out.push_back(phase_at(t));
  last_query_ = t_grid.back();
  return out;
}

void OscillatorProcess::discard_before(double t) {
  const auto [i, frac] = locate(std::max(0.0, t), kGridStep);
  (void)frac;
  if (i <= base_ + 8192) return;
  const std::size_t drop = std::min(i - base_ - 1, freq_.size() - 2);
  wfreq_.erase(wfreq_.begin(), wfreq_.begin() + static_cast<std::ptrdiff_t>(drop));
  freq_.erase(freq_.begin(), freq_.begin() + static_cast<std::ptrdiff_t>(drop));
  integral_.erase(integral_.begin(), integral_.begin() + static_cast<std::ptrdiff_t>(drop));
  wphase_.erase(wphase_.begin(), wphase_.begin() + static_cast<std::ptrdiff_t>(drop));
  base_ += drop;
}

ImpairmentState make_impairment_state(const std::vector<OscillatorTrajectory>& converters,
                                      const std::vector<OscillatorTrajectory>& lnbs,
                                      const OscillatorTrajectory& gateway,
                                      std::uint64_t master_seed,
                                      std::vector<OscillatorProcess::ExternalOffset> converter_externals) {
  if (!converter_externals.empty() && converter_externals.size() != converters.size())
    throw std::invalid_argument("one external offset per converter required");
  ImpairmentState st;
  for (std::size_t n = 0; n < converters.size(); ++n) {
    auto ext = converter_externals.empty() ? OscillatorProcess::ExternalOffset{}
                                           : converter_externals[n];
    st.converters.emplace_back(converters[n], mix_seed(master_seed, 100 + n), std::move(ext));
  }
  for (std::size_t k = 0; k < lnbs.size(); ++k)
    st.lnbs.emplace_back(lnbs[k], mix_seed(master_seed, 200 + k));
  st.gateway = OscillatorProcess(gateway, mix_seed(master_seed, 300));
  return st;
}

namespace {
CMatrix diag_from(std::vector<OscillatorProcess>& procs, double t, std::span<const double> extra_hz) {
  const auto n = static_cast<Eigen::Index>(procs.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double ph = procs[static_cast<std::size_t>(i)].phase_at(t);
    if (!extra_hz.empty()) ph += kTwoPi * extra_hz[static_cast<std::size_t>(i)] * t;
    m(i, i) = unit_phasor(-ph);
  }
  return m;
}
}  // namespace

CMatrix build_T(ImpairmentState& state, double t) { return diag_from(state.converters, t, {}); }

CMatrix build_T(ImpairmentState& state, std::span<const double> doppler_hz, double t) {
  if (doppler_hz.size() != state.converters.size())
    throw std::invalid_argument("doppler vector length must equal the satellite count");
  return diag_from(state.converters, t, doppler_hz);
}

CMatrix build_R(ImpairmentState& state, double t) { return diag_from(state.lnbs, t, {}); }

}  // namespace satmimo
