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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace urllc
{

// PRB pilot layout: pilots on the six odd (1-based) subcarriers of a PRB,
// four pilot symbols each, for a total length of 24.
inline constexpr int prb_pilot_blocks = 6;
inline constexpr int prb_block_symbols = 4;
inline constexpr int prb_pilot_length = prb_pilot_blocks * prb_block_symbols;
inline constexpr int prb_subcarriers = 12;

// PRB subcarrier (0-based) carrying pilot block `block`.
constexpr int prb_pilot_subcarrier(int block) { return 2 * block; }

struct PilotBook
{
    PilotMode mode = PilotMode::orthogonal_ci;
    CMatrix phi; // tau x K, unit-norm columns
    std::vector<std::uint32_t> c_init;

    int length() const { return static_cast<int>(phi.rows()); }
    int ues() const { return static_cast<int>(phi.cols()); }
    bool orthogonal() const { return mode == PilotMode::orthogonal_ci; }
};

// First K columns of the normalized tau-point DFT (tau >= K). Throws for K < 1.
PilotBook make_orthogonal_pilots(int ues, int length = 0);

// 5G NR length-31 Gold sequence c(n) for one c_init.
std::vector<std::uint8_t> gold_sequence(std::uint32_t c_init, std::size_t length);

// QPSK-mapped Gold pilots, one c_init per UE, normalized to unit norm.
// Throws std::invalid_argument on duplicate c_init.
PilotBook make_gold_pilots(std::span<const std::uint32_t> c_init, int length, PilotMode mode = PilotMode::gold_ci);

// c_init = offset + k for UE k.
PilotBook make_gold_pilots(int ues, int length, std::uint32_t first_c_init = 1,
                           PilotMode mode = PilotMode::gold_ci);

PilotBook make_pilots(const Scenario &scenario);

// phi_k restricted to block `block` (4 entries) and zero elsewhere.
CVector masked_pilot(const PilotBook &book, int k, int block);

// 24 x 6|set| block-diagonal PRB pilot matrix; column block * |set| + a holds
// the `block` slice of UE set[a]'s pilot in rows 4*block .. 4*block + 3.
CMatrix assemble_prb_matrix(const PilotBook &book, std::span<const int> ue_set);

// Same layout with column UE set[a] scaled by amplitude[a].
CMatrix assemble_prb_matrix(const PilotBook &book, std::span<const int> ue_set, std::span<const double> amplitude);

// Columns of phi restricted to `ue_set`, each scaled by its amplitude.
CMatrix select_pilots(const PilotBook &book, std::span<const int> ue_set, std::span<const double> amplitude = {});

// CSV with one row per pilot symbol and a (re, im) column pair per UE.
void write_pilot_csv(const PilotBook &book, std::ostream &out);

} // namespace urllc
