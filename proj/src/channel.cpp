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

#include "urllc/channel.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace urllc
{

ChannelRealization::ChannelRealization(int antennas, int ues, int units)
    : antennas_(antennas), ues_(ues), units_(static_cast<std::size_t>(units), CMatrix::Zero(antennas, ues))
{
}

bool ChannelRealization::all_finite() const
{
    for (const auto &u : units_)
        if (!u.allFinite())
            return false;
    return true;
}

PowerDelayProfile exponential_pdp(double delay_spread_s, double tap_spacing_s, int tap_count)
{
    if (!(delay_spread_s > 0.0))
        throw std::invalid_argument("power-delay profile needs a positive delay spread");
    if (tap_count == 1)
        return {{0.0}, {1.0}};
    if (!(tap_spacing_s > 0.0))
        throw std::invalid_argument("power-delay profile needs a positive tap spacing");

    const int taps = tap_count > 0 ? tap_count : static_cast<int>(std::floor(8.0 * delay_spread_s / tap_spacing_s)) + 1;
    PowerDelayProfile pdp;
    double total = 0.0;
    for (int l = 0; l < taps; ++l)
    {
        const double tau = l * tap_spacing_s;
        pdp.delay_s.push_back(tau);
        pdp.power.push_back(std::exp(-tau / delay_spread_s));
        total += pdp.power.back();
    }
    for (double &p : pdp.power)
        p /= total;
    return pdp;
}

PowerDelayProfile scenario_pdp(const Scenario &scenario)
{
    const double spacing = scenario.tap_spacing_s > 0.0 ? scenario.tap_spacing_s : scenario.delay_spread_s / 2.0;
    return exponential_pdp(scenario.delay_spread_s, spacing, scenario.tap_count);
}

cplx frequency_correlation(const PowerDelayProfile &pdp, double delta_f_hz)
{
    cplx r{0.0, 0.0};
    for (std::size_t l = 0; l < pdp.taps(); ++l)
        r += pdp.power[l] * std::polar(1.0, -2.0 * std::numbers::pi * delta_f_hz * pdp.delay_s[l]);
    return r;
}

int FrequencyLayout::units() const
{
    int n = 0;
    for (const auto &b : blocks)
        n += static_cast<int>(b.size());
    return n;
}

std::vector<double> prb_subcarrier_offsets(const Scenario &scenario)
{
    std::vector<double> f(12);
    for (int s = 0; s < 12; ++s)
        f[static_cast<std::size_t>(s)] = s * scenario.subcarrier_spacing_hz;
    return f;
}

FrequencyLayout frequency_layout(const Scenario &scenario)
{
    FrequencyLayout layout;
    if (scenario.pilot_mode == PilotMode::gold_prb)
    {
        layout.blocks.push_back(prb_subcarrier_offsets(scenario));
        return layout;
    }
    const int n = scenario.resolved_subbands();
    for (int b = 0; b < n; ++b)
        layout.blocks.push_back({b * scenario.bandwidth_hz / n});
    return layout;
}

ChannelGenerator::ChannelGenerator(const Scenario &scenario)
    : model_(scenario.channel),
      antennas_(scenario.antennas),
      units_(scenario.frequency_units()),
      antenna_correlation_(scenario.antenna_correlation),
      layout_(frequency_layout(scenario))
{
    if (model_ == ChannelModel::surrogate)
    {
        pdp_ = scenario_pdp(scenario);
        for (const auto &block : layout_.blocks)
        {
            CMatrix phase(static_cast<Eigen::Index>(pdp_.taps()), static_cast<Eigen::Index>(block.size()));
            for (std::size_t l = 0; l < pdp_.taps(); ++l)
                for (std::size_t f = 0; f < block.size(); ++f)
                    phase(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(f)) =
                        std::polar(1.0, -2.0 * std::numbers::pi * block[f] * pdp_.delay_s[l]);
            phase_.push_back(std::move(phase));
        }
    }
}

void ChannelGenerator::draw_small_scale(Rng &rng, CMatrix &gains) const
{
    ComplexGaussian cn;
    if (model_ == ChannelModel::iid_rayleigh)
    {
        cn.fill(gains, rng);
        return;
    }

    const auto taps = static_cast<Eigen::Index>(pdp_.taps());
    const double rho = antenna_correlation_;
    const double innovation = std::sqrt(1.0 - rho * rho);
    CMatrix tap_gains(antennas_, taps);
    Eigen::Index column = 0;
    for (std::size_t b = 0; b < layout_.blocks.size(); ++b)
    {
        if (layout_.blocks[b].size() == 1)
        {
            // A single frequency sums independent unit-power taps, which is
            // one unit-power AR(1) draw; skip the tap expansion.
            cplx x = cn(rng);
            gains(0, column) = x;
            for (Eigen::Index m = 1; m < antennas_; ++m)
            {
                x = rho * x + innovation * cn(rng);
                gains(m, column) = x;
            }
            ++column;
            continue;
        }
        // AR(1) across antennas gives corr(m, m') = rho^|m - m'| per tap
        for (Eigen::Index l = 0; l < taps; ++l)
        {
            const double amp = std::sqrt(pdp_.power[static_cast<std::size_t>(l)]);
            cplx x = cn(rng);
            tap_gains(0, l) = amp * x;
            for (Eigen::Index m = 1; m < antennas_; ++m)
            {
                x = rho * x + innovation * cn(rng);
                tap_gains(m, l) = amp * x;
            }
        }
        const auto width = phase_[b].cols();
        gains.middleCols(column, width).noalias() = tap_gains * phase_[b];
        column += width;
    }
}

void ChannelGenerator::draw_ue(Rng &rng, double beta, int k, ChannelRealization &out) const
{
    CMatrix h(antennas_, units_);
    draw_small_scale(rng, h);
    const double amp = std::sqrt(beta);
    for (int f = 0; f < units_; ++f)
        out.unit(f).col(k) = amp * h.col(f);
}

ChannelRealization ChannelGenerator::draw(std::span<const double> beta, Rng &rng) const
{
    ChannelRealization g = empty(static_cast<int>(beta.size()));
    for (std::size_t k = 0; k < beta.size(); ++k)
        draw_ue(rng, beta[k], static_cast<int>(k), g);
    return g;
}

ChannelRealization gen_iid_rayleigh(const Scenario &scenario, std::span<const double> beta, Rng &rng)
{
    Scenario s = scenario;
    s.channel = ChannelModel::iid_rayleigh;
    return ChannelGenerator(s).draw(beta, rng);
}

ChannelRealization gen_correlated_surrogate(const Scenario &scenario, std::span<const double> beta, Rng &rng)
{
    Scenario s = scenario;
    s.channel = ChannelModel::surrogate;
    return ChannelGenerator(s).draw(beta, rng);
}

double calibrate_small_scale_variance(const Scenario &scenario, Rng &rng, int coefficients)
{
    if (scenario.channel == ChannelModel::iid_rayleigh)
        return 1.0;
    const ChannelGenerator gen(scenario);
    const int per_draw = gen.units() * scenario.antennas;
    double sum = 0.0;
    long count = 0;
    ChannelRealization g = gen.empty(1);
    while (count < coefficients)
    {
        gen.draw_ue(rng, 1.0, 0, g);
        for (int f = 0; f < g.units(); ++f)
            sum += g.unit(f).col(0).squaredNorm();
        count += per_draw;
    }
    return sum / static_cast<double>(count);
}

CMatrix pilot_subcarrier_covariance(const Scenario &scenario, CovarianceMode mode, Rng &rng, int draws)
{
    if (draws < 10)
        throw std::invalid_argument("subcarrier covariance needs at least 10 draws");

    const auto offsets = prb_subcarrier_offsets(scenario);
    CMatrix c(6, 6);
    if (mode == CovarianceMode::analytic)
    {
        if (scenario.channel == ChannelModel::iid_rayleigh)
            return CMatrix::Identity(6, 6);
        const auto pdp = scenario_pdp(scenario);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                c(i, j) = frequency_correlation(pdp, offsets[static_cast<std::size_t>(2 * i)] -
                                                         offsets[static_cast<std::size_t>(2 * j)]);
        return c;
    }

    Scenario prb = scenario;
    prb.pilot_mode = PilotMode::gold_prb;
    const ChannelGenerator gen(prb);
    ChannelRealization g = gen.empty(1);
    c.setZero();
    CMatrix samples(6, scenario.antennas);
    for (int d = 0; d < draws; ++d)
    {
        gen.draw_ue(rng, 1.0, 0, g);
        for (int i = 0; i < 6; ++i)
            samples.row(i) = g.unit(2 * i).col(0).transpose();
        c.noalias() += samples * samples.adjoint();
    }
    c /= static_cast<double>(draws) * scenario.antennas;
    return c;
}

std::vector<CMatrix> subcarrier_covariance(const Scenario &scenario, std::span<const double> beta,
                                           CovarianceMode mode, Rng &rng, int draws)
{
    const CMatrix unit = pilot_subcarrier_covariance(scenario, mode, rng, draws);
    std::vector<CMatrix> out;
    out.reserve(beta.size());
    for (double b : beta)
        out.push_back(b * unit);
    return out;
}

namespace
{

void put_u32(std::ostream &out, std::uint32_t v)
{
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream &in)
{
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char *>(bytes), 4))
        throw std::runtime_error("truncated channel dump");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

} // namespace

void write_channel_dump(const ChannelRealization &g, std::ostream &out)
{
    put_u32(out, static_cast<std::uint32_t>(g.antennas()));
    put_u32(out, static_cast<std::uint32_t>(g.ues()));
    put_u32(out, static_cast<std::uint32_t>(g.units()));
    for (int m = 0; m < g.antennas(); ++m)
        for (int k = 0; k < g.ues(); ++k)
            for (int f = 0; f < g.units(); ++f)
            {
                const cplx v = g(m, k, f);
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v.real())));
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v.imag())));
            }
}

ChannelRealization read_channel_dump(std::istream &in)
{
    const auto antennas = static_cast<int>(get_u32(in));
    const auto ues = static_cast<int>(get_u32(in));
    const auto units = static_cast<int>(get_u32(in));
    ChannelRealization g(antennas, ues, units);
    for (int m = 0; m < antennas; ++m)
        for (int k = 0; k < ues; ++k)
            for (int f = 0; f < units; ++f)
            {
                const float re = std::bit_cast<float>(get_u32(in));
                const float im = std::bit_cast<float>(get_u32(in));
                g(m, k, f) = {re, im};
            }
    return g;
}

} // namespace urllc
