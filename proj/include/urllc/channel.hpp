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

#include "urllc/rng.hpp"
#include "urllc/scenario.hpp"
#include "urllc/types.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace urllc
{

// Channel coefficients g[m][k][f] = sqrt(beta_k) h[m][k][f], stored as one
// M x K matrix per frequency unit (CI subband or PRB subcarrier).
class ChannelRealization
{
public:
    ChannelRealization() = default;
    ChannelRealization(int antennas, int ues, int units);

    int antennas() const { return antennas_; }
    int ues() const { return ues_; }
    int units() const { return static_cast<int>(units_.size()); }

    cplx operator()(int m, int k, int f) const { return units_[static_cast<std::size_t>(f)](m, k); }
    cplx &operator()(int m, int k, int f) { return units_[static_cast<std::size_t>(f)](m, k); }

    const CMatrix &unit(int f) const { return units_[static_cast<std::size_t>(f)]; }
    CMatrix &unit(int f) { return units_[static_cast<std::size_t>(f)]; }

    bool all_finite() const;

private:
    int antennas_ = 0;
    int ues_ = 0;
    std::vector<CMatrix> units_;
};

// Exponential power-delay profile on a uniform tap grid, unit total power.
struct PowerDelayProfile
{
    std::vector<double> delay_s;
    std::vector<double> power;

    std::size_t taps() const { return power.size(); }
};

// Throws std::invalid_argument for a non-positive delay spread or spacing.
PowerDelayProfile exponential_pdp(double delay_spread_s, double tap_spacing_s, int tap_count);

PowerDelayProfile scenario_pdp(const Scenario &scenario);

// E[h(f + delta_f) conj(h(f))] for unit-power small-scale fading.
cplx frequency_correlation(const PowerDelayProfile &pdp, double delta_f_hz);

// Frequency layout of one trial. CI modes draw N independent subbands, each
// sampled at its first subcarrier; PRB mode draws one block of 12 subcarriers.
struct FrequencyLayout
{
    std::vector<std::vector<double>> blocks; // offsets in Hz, per independent block

    int units() const;
};

FrequencyLayout frequency_layout(const Scenario &scenario);

// PRB subcarrier offsets (12 subcarriers, index 0 = first subcarrier).
std::vector<double> prb_subcarrier_offsets(const Scenario &scenario);

class ChannelGenerator
{
public:
    // `scenario` must be resolved.
    explicit ChannelGenerator(const Scenario &scenario);

    int units() const { return units_; }
    ChannelModel model() const { return model_; }
    const PowerDelayProfile &profile() const { return pdp_; }

    ChannelRealization empty(int ues) const { return {antennas_, ues, units_}; }

    // Fills column k of every unit with sqrt(beta) h for one UE.
    void draw_ue(Rng &rng, double beta, int k, ChannelRealization &out) const;

    ChannelRealization draw(std::span<const double> beta, Rng &rng) const;

private:
    void draw_small_scale(Rng &rng, CMatrix &gains) const;

    ChannelModel model_;
    int antennas_;
    int units_;
    double antenna_correlation_;
    PowerDelayProfile pdp_;
    FrequencyLayout layout_;
    std::vector<CMatrix> phase_; // per block: taps x block frequencies
};

ChannelRealization gen_iid_rayleigh(const Scenario &scenario, std::span<const double> beta, Rng &rng);
ChannelRealization gen_correlated_surrogate(const Scenario &scenario, std::span<const double> beta, Rng &rng);

// Sample variance of surrogate small-scale coefficients (var_3GPP); 1 for i.i.d.
double calibrate_small_scale_variance(const Scenario &scenario, Rng &rng, int coefficients = 10000);

// Unit-gain covariance c[s][s'] = E[h_s conj(h_s')] over the six PRB pilot
// subcarriers (0-based 0, 2, ..., 10).
CMatrix pilot_subcarrier_covariance(const Scenario &scenario, CovarianceMode mode, Rng &rng, int draws);

// Per-UE covariance beta_k * c, one 6 x 6 matrix per entry of beta.
std::vector<CMatrix> subcarrier_covariance(const Scenario &scenario, std::span<const double> beta,
                                           CovarianceMode mode, Rng &rng, int draws);

// Little-endian dump: uint32 {M, K, F}, then complex64 (re, im) for
// m, k, f in row-major order.
void write_channel_dump(const ChannelRealization &g, std::ostream &out);
ChannelRealization read_channel_dump(std::istream &in);

} // namespace urllc
