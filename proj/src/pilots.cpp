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

#include "urllc/pilots.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

namespace urllc
{

PilotBook make_orthogonal_pilots(int ues, int length)
{
    if (ues < 1)
        throw std::invalid_argument("orthogonal pilots need at least one UE");
    const int tau = length > 0 ? length : ues;
    if (tau < ues)
        throw std::invalid_argument("orthogonal pilots need tau >= K");

    PilotBook book;
    book.mode = PilotMode::orthogonal_ci;
    book.phi.resize(tau, ues);
    const double scale = 1.0 / std::sqrt(static_cast<double>(tau));
    for (int t = 0; t < tau; ++t)
        for (int k = 0; k < ues; ++k)
        {
            // reduce the exponent first so large t*k keeps full precision
            const long idx = (static_cast<long>(t) * k) % tau;
            book.phi(t, k) = std::polar(scale, -2.0 * std::numbers::pi * static_cast<double>(idx) / tau);
        }
    return book;
}

std::vector<std::uint8_t> gold_sequence(std::uint32_t c_init, std::size_t length)
{
    constexpr std::size_t nc = 1600;
    if (c_init >= (1u << 31))
        throw std::invalid_argument("c_init must fit in 31 bits");

    // x1 and x2 held as 31-bit shift registers, bit i = x(n + i)
    std::uint32_t x1 = 1;
    std::uint32_t x2 = c_init;
    auto advance = [&]() {
        const std::uint32_t f1 = ((x1 >> 3) ^ x1) & 1u;
        const std::uint32_t f2 = ((x2 >> 3) ^ (x2 >> 2) ^ (x2 >> 1) ^ x2) & 1u;
        x1 = (x1 >> 1) | (f1 << 30);
        x2 = (x2 >> 1) | (f2 << 30);
    };
    for (std::size_t n = 0; n < nc; ++n)
        advance();

    std::vector<std::uint8_t> c(length);
    for (std::size_t n = 0; n < length; ++n)
    {
        c[n] = static_cast<std::uint8_t>((x1 ^ x2) & 1u);
        advance();
    }
    return c;
}

PilotBook make_gold_pilots(std::span<const std::uint32_t> c_init, int length, PilotMode mode)
{
    if (c_init.empty())
        throw std::invalid_argument("Gold pilots need at least one UE");
    if (length < 1)
        throw std::invalid_argument("Gold pilots need a positive length");
    if (std::set<std::uint32_t>(c_init.begin(), c_init.end()).size() != c_init.size())
        throw std::invalid_argument("duplicate c_init in Gold pilot assignment");

    PilotBook book;
    book.mode = mode;
    book.c_init.assign(c_init.begin(), c_init.end());
    book.phi.resize(length, static_cast<Eigen::Index>(c_init.size()));
    const double scale = 1.0 / std::sqrt(2.0 * length);
    for (std::size_t k = 0; k < c_init.size(); ++k)
    {
        const auto bits = gold_sequence(c_init[k], 2 * static_cast<std::size_t>(length));
        for (int n = 0; n < length; ++n)
        {
            const double re = 1.0 - 2.0 * bits[2 * static_cast<std::size_t>(n)];
            const double im = 1.0 - 2.0 * bits[2 * static_cast<std::size_t>(n) + 1];
            book.phi(n, static_cast<Eigen::Index>(k)) = scale * cplx(re, im);
        }
    }
    return book;
}

PilotBook make_gold_pilots(int ues, int length, std::uint32_t first_c_init, PilotMode mode)
{
    if (ues < 1)
        throw std::invalid_argument("Gold pilots need at least one UE");
    std::vector<std::uint32_t> c_init(static_cast<std::size_t>(ues));
    for (int k = 0; k < ues; ++k)
        c_init[static_cast<std::size_t>(k)] = first_c_init + static_cast<std::uint32_t>(k);
    return make_gold_pilots(c_init, length, mode);
}

PilotBook make_pilots(const Scenario &scenario)
{
    switch (scenario.pilot_mode)
    {
    case PilotMode::orthogonal_ci:
        return make_orthogonal_pilots(scenario.authorized_ues, scenario.pilot_length);
    case PilotMode::gold_ci:
    case PilotMode::gold_prb:
        return make_gold_pilots(scenario.authorized_ues, scenario.pilot_length, scenario.gold_cinit_offset,
                                scenario.pilot_mode);
    }
    throw std::invalid_argument("unknown pilot mode");
}

CVector masked_pilot(const PilotBook &book, int k, int block)
{
    if (book.length() != prb_pilot_length)
        throw std::invalid_argument("PRB slicing needs length-24 pilots");
    if (k < 0 || k >= book.ues() || block < 0 || block >= prb_pilot_blocks)
        throw std::out_of_range("UE or pilot block outside the pilot book");
    CVector v = CVector::Zero(prb_pilot_length);
    v.segment(block * prb_block_symbols, prb_block_symbols) =
        book.phi.col(k).segment(block * prb_block_symbols, prb_block_symbols);
    return v;
}

CMatrix assemble_prb_matrix(const PilotBook &book, std::span<const int> ue_set, std::span<const double> amplitude)
{
    if (book.length() != prb_pilot_length)
        throw std::invalid_argument("PRB matrix needs length-24 pilots");
    if (!amplitude.empty() && amplitude.size() != ue_set.size())
        throw std::invalid_argument("amplitude list must match the UE set");
    const auto n = static_cast<Eigen::Index>(ue_set.size());
    CMatrix v = CMatrix::Zero(prb_pilot_length, prb_pilot_blocks * n);
    for (Eigen::Index a = 0; a < n; ++a)
    {
        const int k = ue_set[static_cast<std::size_t>(a)];
        if (k < 0 || k >= book.ues())
            throw std::out_of_range(fmt::format("UE {} outside the pilot book", k));
        const double amp = amplitude.empty() ? 1.0 : amplitude[static_cast<std::size_t>(a)];
        for (int s = 0; s < prb_pilot_blocks; ++s)
            v.block(s * prb_block_symbols, s * n + a, prb_block_symbols, 1) =
                amp * book.phi.block(s * prb_block_symbols, k, prb_block_symbols, 1);
    }
    return v;
}

CMatrix assemble_prb_matrix(const PilotBook &book, std::span<const int> ue_set)
{
    return assemble_prb_matrix(book, ue_set, {});
}

CMatrix select_pilots(const PilotBook &book, std::span<const int> ue_set, std::span<const double> amplitude)
{
    CMatrix out(book.length(), static_cast<Eigen::Index>(ue_set.size()));
    for (std::size_t a = 0; a < ue_set.size(); ++a)
    {
        const int k = ue_set[a];
        if (k < 0 || k >= book.ues())
            throw std::out_of_range(fmt::format("UE {} outside the pilot book", k));
        out.col(static_cast<Eigen::Index>(a)) = (amplitude.empty() ? 1.0 : amplitude[a]) * book.phi.col(k);
    }
    return out;
}

void write_pilot_csv(const PilotBook &book, std::ostream &out)
{
    out << "symbol";
    for (int k = 0; k < book.ues(); ++k)
        out << fmt::format(",ue{}_re,ue{}_im", k, k);
    out << '\n';
    for (int t = 0; t < book.length(); ++t)
    {
        out << t;
        for (int k = 0; k < book.ues(); ++k)
            out << fmt::format(",{:.17g},{:.17g}", book.phi(t, k).real(), book.phi(t, k).imag());
        out << '\n';
    }
}

} // namespace urllc
