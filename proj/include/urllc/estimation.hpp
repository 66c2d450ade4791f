// SPDX-License-Identifier: Apache-2.0
//
// urllc-mimo: grant-free massive MIMO uplink link-level simulator
// Copyright (C) 2026 The urllc-mimo Authors
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

#include "urllc/pilots.hpp"
#include "urllc/scenario.hpp"
#include "urllc/types.hpp"

#include <span>
#include <vector>

namespace urllc
{

// Channel estimates per frequency unit: N subbands in CI modes, the six
// pilot-bearing subcarriers in PRB mode. Each unit is M x K with zero
// columns for UEs outside the detected set.
struct ChannelEstimate
{
    std::vector<CMatrix> units;

    int count() const { return static_cast<int>(units.size()); }
};

// Prior entries above this switch the diagonal estimator to the
// inversion-free form.
inline constexpr double large_prior = 1e6;

// Joint LMMSE for one received block y (tau x cols) with pilots phi_b
// (tau x |B|, columns already scaled by sqrt(eta)) and diagonal prior.
// Returns the |B| x cols estimate of G_B^T.
CMatrix lmmse_ci_diag(const CMatrix &received, const CMatrix &phi_b, std::span<const double> prior, double pilot_snr);

// Per-UE estimator with identity-shaped prior const_k * I_M on orthogonal
// pilots: g_k = sqrt(tau rho) a c / (tau rho a^2 c + 1) Y^T conj(phi_k)
// where a = sqrt(eta_k) and phi_k has unit norm. Returns the cols-vector.
// Throws std::invalid_argument for prior <= 0.
CVector lmmse_ci_per_ue(const CMatrix &received, const CVector &phi_k, double amplitude, double prior,
                        double pilot_snr);

// PRB LMMSE for y (24 x M) with pilot matrix v (24 x 6|B|, amplitude folded
// in) and prior covariance c_tilde (6|B| x 6|B|, same column order as v).
// Returns the 6|B| x M estimate; row s * |B| + a is UE a on pilot block s.
CMatrix lmmse_prb(const CMatrix &received, const CMatrix &v, const CMatrix &c_tilde, double pilot_snr);

// Prior covariance over the PRB unknowns for UEs in `ue_set`: block (s, s')
// is diag_a(covariance[ue_set[a]](s, s')).
CMatrix assemble_prb_prior(std::span<const CMatrix> covariance, std::span<const int> ue_set);

struct EstimationInput
{
    const CMatrix *received = nullptr; // tau x (M * N) CI stack or 24 x M PRB block
    const PilotBook *pilots = nullptr;
    UeSet detected;
    std::vector<double> amplitude;   // sqrt(eta_k) for every authorized UE
    std::vector<double> prior;       // const_k for every authorized UE (CI)
    std::vector<CMatrix> covariance; // per-UE 6 x 6 subcarrier covariance (PRB)
    double pilot_snr = 0.0;
    int antennas = 0;
    int subbands = 1;
};

ChannelEstimate estimate_channels(EstimatorId estimator, const EstimationInput &input);

} // namespace urllc
