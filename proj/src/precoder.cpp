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

#include "satmimo/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace satmimo {

namespace {

// Inverse of the Hermitian Gram matrix. For 2x2 the closed form is used.
CMatrix gram_inverse(const CMatrix& gram) {
  if (gram.rows() == 1) {
    CMatrix inv(1, 1);
    inv(0, 0) = 1.0 / gram(0, 0);
    return inv;
  }
  if (gram.rows() == 2) {
    const Complex det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    CMatrix inv(2, 2);
    inv << gram(1, 1), -gram(0, 1), -gram(1, 0), gram(0, 0);
    return inv / det;
  }
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) throw RankDeficientError("Gram matrix is not positive definite");
  return llt.solve(CMatrix::Identity(gram.rows(), gram.cols()));
}

double hermitian_condition(const CMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev(0);
  const double hi = ev(ev.size() - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

PrecodingMatrix zf_precoder(const CMatrix& H) {
  if (H.rows() == 0 || H.cols() == 0) throw std::invalid_argument("zf_precoder: empty channel");
  if (H.rows() > H.cols()) throw RankDeficientError("zf_precoder: more users than satellites");
  if (!H.allFinite()) throw std::invalid_argument("zf_precoder: non-finite channel");
  const CMatrix gram = H * H.adjoint();
  const double cond = hermitian_condition(gram);
  if (!(cond <= kRankConditionLimit))
    throw RankDeficientError("zf_precoder: channel is rank deficient (cond(HH^H) = " +
                             std::to_string(cond) + ")");
  const CMatrix G = H.adjoint() * gram_inverse(gram);
  const double peak = (G * G.adjoint()).diagonal().real().maxCoeff();
  const double lam = 1.0 / peak;
  PrecodingMatrix p;
  p.entries = G * std::sqrt(lam);
  p.lambda.assign(static_cast<std::size_t>(H.rows()), lam);
  p.mode = PrecoderMode::zf;
  return p;
}

PrecodingMatrix siso_baseline(std::size_t n, std::size_t k, std::size_t active_satellite,
                              std::size_t served_stream) {
  if (active_satellite >= n || served_stream >= k)
    throw std::out_of_range("siso_baseline: index out of range");
  PrecodingMatrix p;
  p.entries = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  p.entries(static_cast<Eigen::Index>(active_satellite), static_cast<Eigen::Index>(served_stream)) = 1.0;
  p.lambda.assign(k, 0.0);
  p.lambda[served_stream] = 1.0;
  p.mode = PrecoderMode::siso_baseline;
  return p;
}

PrecodingMatrix passthrough(std::size_t n, std::size_t k) {
  PrecodingMatrix p;
  p.entries = CMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  p.lambda.assign(k, 0.0);
  for (std::size_t i = 0; i < std::min(n, k); ++i) p.lambda[i] = 1.0;
  p.mode = PrecoderMode::passthrough;
  return p;
}

RateResult sum_rate(const std::vector<double>& lambda, const std::vector<double>& sigma2) {
  if (lambda.size() != sigma2.size()) throw std::invalid_argument("sum_rate: size mismatch");
  RateResult r;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(sigma2[k] > 0.0)) throw std::invalid_argument("sum_rate: noise variance must be > 0");
    if (lambda[k] < 0.0) throw std::invalid_argument("sum_rate: negative loading");
    r.per_user.push_back(std::log2(1.0 + lambda[k] / sigma2[k]));
    r.total += r.per_user.back();
  }
  return r;
}

CVector apply_precoding(const PrecodingMatrix& P, const CVector& d) {
  if (P.entries.cols() != d.size()) throw std::invalid_argument("apply_precoding: dimension mismatch");
  return P.entries * d;
}

double max_antenna_power(const CMatrix& P) {
  return (P * P.adjoint()).diagonal().real().maxCoeff();
}

double predicted_gain_db(const CMatrix& H, const PrecodingMatrix& P, std::size_t k,
                         std::size_t active_satellite) {
  const double ref = std::norm(H(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(active_satellite)));
  return 10.0 * std::log10(P.lambda.at(k) / ref);
}

}  // namespace satmimo
