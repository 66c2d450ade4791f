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
#include "urllc/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace urllc
{

enum class PilotMode
{
    orthogonal_ci,
    gold_ci,
    gold_prb,
};

enum class DetectorId
{
    np,
    ml,
    mmv,
    nnls,
    prb_ml,
    perfect,
};

enum class EstimatorId
{
    automatic,
    ci_diag,
    ci_per_ue,
    prb,
};

enum class PowerControl
{
    full_power,
    open_loop,
};

enum class ChannelModel
{
    iid_rayleigh,
    surrogate,
};

enum class PathlossModel
{
    uma_nlos,
    umi_nlos,
    log_distance,
};

// How per-frequency-unit SINRs of one UE are folded into one throughput sample.
enum class SinrAggregation
{
    automatic, // first subband in CI modes, mean in PRB mode
    first,
    mean,
    min,
};

enum class CovarianceMode
{
    analytic,
    sample,
};

// Which PRB subcarriers the SINR is evaluated on.
enum class PrbSinrSubcarriers
{
    pilot,
    all,
};

std::string_view to_string(PilotMode v);
std::string_view to_string(DetectorId v);
std::string_view to_string(EstimatorId v);
std::string_view to_string(PowerControl v);
std::string_view to_string(ChannelModel v);
std::string_view to_string(PathlossModel v);
std::string_view to_string(SinrAggregation v);
std::string_view to_string(CovarianceMode v);
std::string_view to_string(PrbSinrSubcarriers v);

// Parsers throw std::invalid_argument on unknown names.
PilotMode parse_pilot_mode(std::string_view s);
DetectorId parse_detector(std::string_view s);
EstimatorId parse_estimator(std::string_view s);
PowerControl parse_power_control(std::string_view s);
ChannelModel parse_channel_model(std::string_view s);
PathlossModel parse_pathloss_model(std::string_view s);
SinrAggregation parse_sinr_aggregation(std::string_view s);
CovarianceMode parse_covariance_mode(std::string_view s);
PrbSinrSubcarriers parse_prb_sinr_subcarriers(std::string_view s);

// Full experiment configuration. Zero-valued "auto" fields are resolved by
// resolve(): link-budget SNRs, subband count, shadowing and delay spread.
struct Scenario
{
    // system
    int antennas = 128;          // M
    int authorized_ues = 50;     // K, UEs holding a unique pilot
    int deployed_ues = 50;       // UEs dropped in the cell, K_pop >= K
    double mean_active_ues = 10; // Poisson mean of the active count
    int coherence_symbols = 168; // tau_c
    int pilot_length = 50;       // tau
    int subbands = 16;           // N; 0 derives it from the coherence bandwidth
    double bandwidth_hz = 40e6;
    double subcarrier_spacing_hz = 30e3;

    // cell and large-scale fading
    double cell_radius_m = 150.0;
    double min_distance_m = 10.0;
    PathlossModel pathloss = PathlossModel::uma_nlos;
    double carrier_hz = 4e9;
    double bs_height_m = 0.0;        // 0 selects the model preset
    double ue_height_m = 1.5;
    double shadowing_db = -1.0;      // < 0 selects the model preset
    double log_distance_ref_db = 30.0; // log-distance loss at 1 m
    double log_distance_exponent = 3.5;

    // link budget
    double tx_power_dbm = 23.0;
    double noise_density_dbm_hz = -174.0;
    double noise_figure_db = 9.0;
    double pilot_snr = 0.0; // rho_p, linear; 0 derives it from the link budget
    double data_snr = 0.0;  // rho_u, linear; 0 derives it from the link budget

    // small-scale fading
    ChannelModel channel = ChannelModel::iid_rayleigh;
    double delay_spread_s = 363e-9;
    double tap_spacing_s = 0.0; // 0 -> delay_spread / 2
    int tap_count = 0;          // 0 -> taps up to 8 delay spreads
    double antenna_correlation = 0.0;
    double small_scale_variance = 0.0; // var_3GPP; 0 -> calibrate
    CovarianceMode covariance_mode = CovarianceMode::sample;
    int covariance_draws = 1000;

    // pilots
    PilotMode pilot_mode = PilotMode::orthogonal_ci;
    std::uint32_t gold_cinit_offset = 1;

    // detection
    DetectorId detector = DetectorId::np;
    double p_fa = 1e-3;
    int max_sweeps = 50;
    double sweep_tolerance = 1e-6;
    int calibration_trials = 2000;
    double threshold = 0.0; // > 0 pins gamma'; otherwise closed form or calibration
    std::string calibration_cache;

    // estimation
    EstimatorId estimator = EstimatorId::automatic;

    // power control
    PowerControl power_control = PowerControl::full_power;
    double drop_fraction = 0.0;

    // run
    std::uint64_t seed = 1;
    bool redraw_population = true;
    SinrAggregation sinr_aggregation = SinrAggregation::automatic;
    PrbSinrSubcarriers prb_sinr_subcarriers = PrbSinrSubcarriers::pilot;
    std::vector<double> quantile_levels{1e-1, 1e-2, 1e-3};

    // Throws std::invalid_argument describing the first violated invariant.
    void validate() const;

    // Copy with every "auto" field replaced by its derived value.
    Scenario resolved() const;

    double shadowing_std_db() const;
    double resolved_bs_height() const;
    int resolved_subbands() const;
    double link_budget_snr() const;
    EstimatorId resolved_estimator() const;
    SinrAggregation resolved_aggregation() const;
    int frequency_units() const; // N in CI modes, 12 subcarriers in PRB mode
};

struct UePopulation
{
    std::vector<double> radius_m;
    std::vector<double> angle_rad;
    std::vector<double> beta;  // linear large-scale gain
    std::vector<double> eta;   // power-control coefficient in [0, 1]
    std::vector<bool> retained;

    std::size_t size() const { return beta.size(); }
};

struct ActivityPattern
{
    std::vector<std::uint8_t> indicator; // a_k
    UeSet active;                        // sorted

    std::size_t count() const { return active.size(); }
};

// 38.901-style pathloss in dB at a 2-D distance (no shadowing).
double pathloss_db(const Scenario &scenario, double distance_2d_m);

// Linear gain beta for a UE at a distance with a given shadowing draw.
double large_scale_gain(const Scenario &scenario, double distance_2d_m, double shadowing_db);

UePopulation build_population(const Scenario &scenario, Rng &rng);

ActivityPattern draw_activity(const Scenario &scenario, Rng &rng);

// eta_k = min_{R} beta / beta_k over the retained set; dropped UEs get 0.
std::vector<double> open_loop_power_control(const UePopulation &population);

// Sets retained flags: the ceil(fraction * size) weakest UEs are dropped.
void apply_drop(UePopulation &population, double drop_fraction);

// Authorized UEs (those holding pilots 0..K-1): the first K retained UEs.
struct AuthorizedUes
{
    std::vector<int> population_index;
    std::vector<double> beta;
    std::vector<double> eta;
};

AuthorizedUes authorize(const Scenario &scenario, const UePopulation &population);

} // namespace urllc
