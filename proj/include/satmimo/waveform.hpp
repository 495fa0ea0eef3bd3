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
#include <random>
#include <span>
#include <vector>

#include "satmimo/common.hpp"

namespace satmimo {

/// QPSK 5/6 quasi-error-free operating point used as the decode proxy.
inline constexpr double kDecodeThresholdDb = 9.0;
/// Cap applied to infinite MER values when writing files.
inline constexpr double kMerFileCapDb = 80.0;

enum class Constellation { qpsk, gaussian };

struct SymbolStream {
  std::vector<Complex> symbols;
  std::vector<std::uint8_t> bits;  // empty for gaussian streams
  Constellation constellation = Constellation::qpsk;
};

/// Gray mapping, bit pair (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
/// Throws std::invalid_argument for an odd bit count.
SymbolStream qpsk_modulate(std::span<const std::uint8_t> bits);

SymbolStream random_qpsk(std::size_t count, std::mt19937_64& rng);
SymbolStream gaussian_symbols(std::size_t count, std::mt19937_64& rng);

/// Adds CN(0, 10^(-snr/10)); snr_db = +inf leaves the stream unchanged.
SymbolStream add_awgn(const SymbolStream& stream, double snr_db, std::uint64_t seed);

/// In-place CN(0, sigma2) noise.
void add_complex_noise(std::span<Complex> x, double sigma2, std::mt19937_64& rng);

enum class MerReference { known_sequence, decision_directed };

struct MerMeasurement {
  double mer_db = std::numeric_limits<double>::infinity();
  double evm_rms = 0.0;  // percent
  std::size_t n_symbols = 0;
  MerReference reference = MerReference::known_sequence;
  Complex gain{1.0, 0.0};  // least-squares fit of received onto reference
};

/// MER after the best complex scalar gain: sum|g ref|^2 / sum|g ref - rx|^2.
MerMeasurement measure_mer(std::span<const Complex> received, std::span<const Complex> reference);

/// Same, against nearest-QPSK hard decisions of the power-normalized input.
MerMeasurement measure_mer_decision_directed(std::span<const Complex> received);

/// log2(1 + 10^(snr/10)).
double snr_to_rate(double snr_db);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace satmimo
