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

#include "urllc/scenario.hpp"
#include "urllc/types.hpp"

#include <span>
#include <string_view>

namespace urllc
{

enum class UeLabel
{
    detected_active,
    misdetected,
    false_alarm,
    true_inactive,
};

std::string_view to_string(UeLabel label);

UeLabel classify(bool active, bool detected);

// MMSE combiners v_k = sqrt(rho eta_k) (rho sum_{B} eta ghat ghat^H + I)^{-1} ghat_k
// for k in B, as columns of an M x K matrix; zero columns outside B.
CMatrix build_mmse_receiver(const CMatrix &estimates, std::span<const double> eta, double data_snr,
                            std::span<const int> detected);

// SINR of UE k under combiner v against the true channels of the active set.
// Returns 0 for a zero combiner.
double instantaneous_sinr(const CVector &v, const CMatrix &channels, std::span<const double> eta, double data_snr,
                          std::span<const int> active, int k);

// SINR for every k in B (zero for UEs outside B), one receiver matrix.
RVector instantaneous_sinr(const CMatrix &receiver, const CMatrix &channels, std::span<const double> eta,
                           double data_snr, std::span<const int> active, std::span<const int> detected);

// 1 dB decoding penalty applied to the linear SINR.
inline constexpr double decoding_penalty = 0.7943282347242815; // 10^(-1/10)

// ((tau_c - tau) / tau_c) * bandwidth * log2(1 + sinr * 10^(-1/10)).
double effective_throughput(double sinr, int coherence_symbols, int pilot_length, double bandwidth_hz);
double effective_throughput(double sinr, const Scenario &scenario);

} // namespace urllc
