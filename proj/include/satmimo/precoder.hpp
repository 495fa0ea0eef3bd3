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

#include <vector>

#include "satmimo/common.hpp"

namespace satmimo {

enum class PrecoderMode { zf, siso_baseline, passthrough };

/// N x K precoder with the per-user loading it achieves.
struct PrecodingMatrix {
  CMatrix entries;
  std::vector<double> lambda;
  PrecoderMode mode = PrecoderMode::passthrough;
};

inline constexpr double kRankConditionLimit = 1e12;

/// Equal-loading zero-forcing under the per-antenna power constraint.
/// Throws RankDeficientError when cond(H H^H) exceeds kRankConditionLimit.
PrecodingMatrix zf_precoder(const CMatrix& H);

/// One unit entry at (active_satellite, served_stream).
PrecodingMatrix siso_baseline(std::size_t n, std::size_t k, std::size_t active_satellite,
                              std::size_t served_stream);

/// Identity mapping of stream k to satellite k (uncoordinated reuse).
PrecodingMatrix passthrough(std::size_t n, std::size_t k);

struct RateResult {
  std::vector<double> per_user;
  double total = 0.0;
};

/// sum_k log2(1 + lambda_k / sigma2_k).
RateResult sum_rate(const std::vector<double>& lambda, const std::vector<double>& sigma2);

/// x = P d.
CVector apply_precoding(const PrecodingMatrix& P, const CVector& d);

/// max_n [P P^H]_nn
double max_antenna_power(const CMatrix& P);

/// SNR gain of ZF over single-satellite service for user k, in dB:
/// 10 log10(lambda_k / |H(k, active)|^2).
double predicted_gain_db(const CMatrix& H, const PrecodingMatrix& P, std::size_t k,
                         std::size_t active_satellite);

}  // namespace satmimo
