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

#include "satmimo/waveform.hpp"

#include <cmath>
#include <stdexcept>

namespace satmimo {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

SymbolStream qpsk_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_modulate: odd bit count");
  SymbolStream s;
  s.bits.assign(bits.begin(), bits.end());
  s.symbols.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2) {
    const double re = bits[i] ? -kInvSqrt2 : kInvSqrt2;
    const double im = bits[i + 1] ? -kInvSqrt2 : kInvSqrt2;
    s.symbols.emplace_back(re, im);
  }
  return s;
}

SymbolStream random_qpsk(std::size_t count, std::mt19937_64& rng) {
  std::vector<std::uint8_t> bits(2 * count);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return qpsk_modulate(bits);
}

SymbolStream gaussian_symbols(std::size_t count, std::mt19937_64& rng) {
  SymbolStream s;
  s.constellation = Constellation::gaussian;
  s.symbols.resize(count, Complex{0.0, 0.0});
  add_complex_noise(s.symbols, 1.0, rng);
  return s;
}

void add_complex_noise(std::span<Complex> x, double sigma2, std::mt19937_64& rng) {
  if (sigma2 < 0.0) throw std::invalid_argument("noise variance must be >= 0");
  if (sigma2 == 0.0) return;
  std::normal_distribution<double> nd(0.0, std::sqrt(sigma2 / 2.0));
  for (auto& v : x) {
    const double re = nd(rng);
    const double im = nd(rng);
    v += Complex{re, im};
  }
}

SymbolStream add_awgn(const SymbolStream& stream, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("add_awgn: snr must be finite or +inf");
  SymbolStream out = stream;
  if (snr_db == std::numeric_limits<double>::infinity()) return out;
  std::mt19937_64 rng(seed);
  add_complex_noise(out.symbols, std::pow(10.0, -snr_db / 10.0), rng);
  return out;
}

MerMeasurement measure_mer(std::span<const Complex> received, std::span<const Complex> reference) {
  if (received.empty()) throw std::invalid_argument("measure_mer: empty input");
  if (received.size() != reference.size()) throw std::invalid_argument("measure_mer: length mismatch");
  Complex cross{0.0, 0.0};
  double ref_pow = 0.0;
  for (std::size_t i = 0; i < received.size(); ++i) {
    cross += std::conj(reference[i]) * received[i];
    ref_pow += std::norm(reference[i]);
  }
  if (!(ref_pow > 0.0)) throw std::invalid_argument("measure_mer: zero reference power");
  MerMeasurement m;
  m.n_symbols = received.size();
  m.gain = cross / ref_pow;
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < received.size(); ++i) {
    const Complex ideal = m.gain * reference[i];
    sig += std::norm(ideal);
    err += std::norm(ideal - received[i]);
  }
  if (err <= 0.0) {
    m.mer_db = std::numeric_limits<double>::infinity();
    m.evm_rms = 0.0;
  } else if (sig <= 0.0) {
    m.mer_db = -std::numeric_limits<double>::infinity();
    m.evm_rms = std::numeric_limits<double>::infinity();
  } else {
    m.mer_db = 10.0 * std::log10(sig / err);
    m.evm_rms = 100.0 * std::sqrt(err / sig);
  }
  return m;
}

MerMeasurement measure_mer_decision_directed(std::span<const Complex> received) {
  if (received.empty()) throw std::invalid_argument("measure_mer: empty input");
  double pow = 0.0;
  for (const auto& v : received) pow += std::norm(v);
  const double scale = pow > 0.0 ? std::sqrt(static_cast<double>(received.size()) / pow) : 1.0;
  std::vector<Complex> decided(received.size());
  for (std::size_t i = 0; i < received.size(); ++i) {
    const Complex v = received[i] * scale;
    decided[i] = {v.real() >= 0.0 ? kInvSqrt2 : -kInvSqrt2, v.imag() >= 0.0 ? kInvSqrt2 : -kInvSqrt2};
  }
  auto m = measure_mer(received, decided);
  m.reference = MerReference::decision_directed;
  return m;
}

double snr_to_rate(double snr_db) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_to_rate: snr must be finite");
  return std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

}  // namespace satmimo
