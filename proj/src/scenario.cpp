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

#include "urllc/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace urllc
{

namespace
{

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<PilotMode, 3> pilot_mode_names{{
    {PilotMode::orthogonal_ci, "orthogonal-ci"},
    {PilotMode::gold_ci, "gold-ci"},
    {PilotMode::gold_prb, "gold-prb"},
}};
constexpr NameTable<DetectorId, 6> detector_names{{
    {DetectorId::np, "np"},
    {DetectorId::ml, "ml"},
    {DetectorId::mmv, "mmv"},
    {DetectorId::nnls, "nnls"},
    {DetectorId::prb_ml, "prb-ml"},
    {DetectorId::perfect, "perfect"},
}};
constexpr NameTable<EstimatorId, 4> estimator_names{{
    {EstimatorId::automatic, "auto"},
    {EstimatorId::ci_diag, "ci-diag"},
    {EstimatorId::ci_per_ue, "ci-per-ue"},
    {EstimatorId::prb, "prb"},
}};
constexpr NameTable<PowerControl, 2> power_control_names{{
    {PowerControl::full_power, "full-power"},
    {PowerControl::open_loop, "open-loop"},
}};
constexpr NameTable<ChannelModel, 2> channel_names{{
    {ChannelModel::iid_rayleigh, "iid"},
    {ChannelModel::surrogate, "surrogate"},
}};
constexpr NameTable<PathlossModel, 3> pathloss_names{{
    {PathlossModel::uma_nlos, "uma-nlos"},
    {PathlossModel::umi_nlos, "umi-nlos"},
    {PathlossModel::log_distance, "log-distance"},
}};
constexpr NameTable<SinrAggregation, 4> aggregation_names{{
    {SinrAggregation::automatic, "auto"},
    {SinrAggregation::first, "first"},
    {SinrAggregation::mean, "mean"},
    {SinrAggregation::min, "min"},
}};
constexpr NameTable<CovarianceMode, 2> covariance_names{{
    {CovarianceMode::analytic, "analytic"},
    {CovarianceMode::sample, "sample"},
}};
constexpr NameTable<PrbSinrSubcarriers, 2> prb_sinr_names{{
    {PrbSinrSubcarriers::pilot, "pilot"},
    {PrbSinrSubcarriers::all, "all"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N> &table, Enum v)
{
    for (const auto &[e, name] : table)
        if (e == v)
            return name;
    return "?";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N> &table, std::string_view s, const char *what)
{
    for (const auto &[e, name] : table)
        if (name == s)
            return e;
    std::string msg = std::string("unknown ") + what + " '" + std::string(s) + "' (expected one of:";
    for (const auto &entry : table)
        msg += " " + std::string(entry.second);
    throw std::invalid_argument(msg + ")");
}

void require(bool condition, const char *message)
{
    if (!condition)
        throw std::invalid_argument(message);
}

constexpr double speed_of_light = 299792458.0;

// 38.901 Table 7.4.1-1 LOS pathloss, used as the lower envelope of NLOS.
double los_pathloss(double d2d, double d3d, double fc_ghz, double h_bs, double h_ut,
                    double pl1_const, double pl1_slope, double pl2_bp_coeff)
{
    const double h_e = 1.0;
    const double d_bp = 4.0 * (h_bs - h_e) * (h_ut - h_e) * fc_ghz * 1e9 / speed_of_light;
    if (d2d <= d_bp)
        return pl1_const + pl1_slope * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
    return pl1_const + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) -
           pl2_bp_coeff * std::log10(d_bp * d_bp + (h_bs - h_ut) * (h_bs - h_ut));
}

} // namespace

std::string_view to_string(PilotMode v) { return name_of(pilot_mode_names, v); }
std::string_view to_string(DetectorId v) { return name_of(detector_names, v); }
std::string_view to_string(EstimatorId v) { return name_of(estimator_names, v); }
std::string_view to_string(PowerControl v) { return name_of(power_control_names, v); }
std::string_view to_string(ChannelModel v) { return name_of(channel_names, v); }
std::string_view to_string(PathlossModel v) { return name_of(pathloss_names, v); }
std::string_view to_string(SinrAggregation v) { return name_of(aggregation_names, v); }
std::string_view to_string(CovarianceMode v) { return name_of(covariance_names, v); }
std::string_view to_string(PrbSinrSubcarriers v) { return name_of(prb_sinr_names, v); }

PilotMode parse_pilot_mode(std::string_view s) { return parse_name(pilot_mode_names, s, "pilot mode"); }
DetectorId parse_detector(std::string_view s) { return parse_name(detector_names, s, "detector"); }
EstimatorId parse_estimator(std::string_view s) { return parse_name(estimator_names, s, "estimator"); }
PowerControl parse_power_control(std::string_view s)
{
    return parse_name(power_control_names, s, "power control");
}
ChannelModel parse_channel_model(std::string_view s) { return parse_name(channel_names, s, "channel model"); }
PathlossModel parse_pathloss_model(std::string_view s)
{
    return parse_name(pathloss_names, s, "pathloss model");
}
SinrAggregation parse_sinr_aggregation(std::string_view s)
{
    return parse_name(aggregation_names, s, "SINR aggregation");
}
CovarianceMode parse_covariance_mode(std::string_view s)
{
    return parse_name(covariance_names, s, "covariance mode");
}
PrbSinrSubcarriers parse_prb_sinr_subcarriers(std::string_view s)
{
    return parse_name(prb_sinr_names, s, "PRB SINR subcarrier set");
}

void Scenario::validate() const
{
    require(antennas >= 1, "M must be at least 1");
    require(authorized_ues >= 1, "K_total must be at least 1");
    require(deployed_ues >= authorized_ues, "K_pop must be at least K_total");
    require(mean_active_ues >= 0.0 && mean_active_ues <= authorized_ues,
            "lambda_active must lie in [0, K_total]");
    require(pilot_length >= 1 && pilot_length <= coherence_symbols, "tau must lie in [1, tau_c]");
    require(subbands >= 0, "N must be non-negative (0 derives it)");
    require(bandwidth_hz > 0.0 && subcarrier_spacing_hz > 0.0, "bandwidths must be positive");
    require(cell_radius_m > 0.0 && min_distance_m >= 0.0 && min_distance_m <= cell_radius_m,
            "cell radius must be positive and not below the minimum distance");
    require(carrier_hz > 0.0 && ue_height_m > 0.0 && bs_height_m >= 0.0, "invalid carrier or antenna heights");
    require(pilot_snr >= 0.0 && data_snr >= 0.0, "SNR overrides must be non-negative (0 derives them)");
    require(std::isfinite(tx_power_dbm) && std::isfinite(noise_figure_db), "link budget must be finite");
    require(drop_fraction >= 0.0 && drop_fraction < 1.0, "drop_fraction must lie in [0, 1)");
    require(p_fa > 0.0 && p_fa < 1.0, "P_FA must lie in (0, 1)");
    require(max_sweeps >= 1 && sweep_tolerance >= 0.0, "invalid sweep budget");
    require(calibration_trials >= 1, "calibration_trials must be positive");
    require(covariance_draws >= 10, "covariance_draws must be at least 10");
    require(antenna_correlation >= 0.0 && antenna_correlation < 1.0, "antenna correlation must lie in [0, 1)");
    require(tap_count >= 0 && tap_spacing_s >= 0.0, "invalid tap layout");
    if (channel == ChannelModel::surrogate)
        require(delay_spread_s > 0.0, "surrogate channel needs a positive delay spread");
    for (double p : quantile_levels)
        require(p > 0.0 && p < 1.0, "quantile levels must lie in (0, 1)");

    switch (pilot_mode)
    {
    case PilotMode::orthogonal_ci:
        require(pilot_length >= authorized_ues, "orthogonal pilots need tau >= K_total");
        break;
    case PilotMode::gold_ci:
        break;
    case PilotMode::gold_prb:
        require(pilot_length == 24 && coherence_symbols == 168, "PRB pilots need tau = 24 and tau_c = 168");
        break;
    }

    if (detector == DetectorId::np)
        require(pilot_mode == PilotMode::orthogonal_ci, "the NP detector needs orthogonal pilots");
    if (detector == DetectorId::prb_ml)
        require(pilot_mode == PilotMode::gold_prb, "the PRB-ML detector needs PRB pilots");
    if (estimator == EstimatorId::ci_per_ue)
        require(pilot_mode == PilotMode::orthogonal_ci, "the per-UE estimator needs orthogonal pilots");
    if (estimator == EstimatorId::prb)
        require(pilot_mode == PilotMode::gold_prb, "the PRB estimator needs PRB pilots");

    const int dropped = static_cast<int>(std::ceil(drop_fraction * deployed_ues - 1e-9));
    require(deployed_ues - dropped >= authorized_ues, "too few UEs remain after dropping to authorize K_total");
}

double Scenario::shadowing_std_db() const
{
    if (shadowing_db >= 0.0)
        return shadowing_db;
    switch (pathloss)
    {
    case PathlossModel::uma_nlos:
        return 6.0;
    case PathlossModel::umi_nlos:
        return 7.82;
    case PathlossModel::log_distance:
        return 8.0;
    }
    return 0.0;
}

double Scenario::resolved_bs_height() const
{
    if (bs_height_m > 0.0)
        return bs_height_m;
    return pathloss == PathlossModel::umi_nlos ? 10.0 : 25.0;
}

int Scenario::resolved_subbands() const
{
    if (subbands > 0)
        return subbands;
    const double coherence_bw = 1.0 / (2.0 * 50.0 * delay_spread_s);
    return std::max(1, static_cast<int>(std::floor(bandwidth_hz / coherence_bw)));
}

double Scenario::link_budget_snr() const
{
    const double noise_dbm = noise_density_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
    return db_to_linear(tx_power_dbm - noise_dbm);
}

EstimatorId Scenario::resolved_estimator() const
{
    if (estimator != EstimatorId::automatic)
        return estimator;
    switch (pilot_mode)
    {
    case PilotMode::orthogonal_ci:
        return channel == ChannelModel::iid_rayleigh ? EstimatorId::ci_diag : EstimatorId::ci_per_ue;
    case PilotMode::gold_ci:
        return EstimatorId::ci_diag;
    case PilotMode::gold_prb:
        return EstimatorId::prb;
    }
    return EstimatorId::ci_diag;
}

SinrAggregation Scenario::resolved_aggregation() const
{
    if (sinr_aggregation != SinrAggregation::automatic)
        return sinr_aggregation;
    return pilot_mode == PilotMode::gold_prb ? SinrAggregation::mean : SinrAggregation::first;
}

int Scenario::frequency_units() const
{
    return pilot_mode == PilotMode::gold_prb ? 12 : resolved_subbands();
}

Scenario Scenario::resolved() const
{
    Scenario s = *this;
    s.subbands = resolved_subbands();
    s.shadowing_db = shadowing_std_db();
    s.bs_height_m = resolved_bs_height();
    if (s.pilot_snr == 0.0)
        s.pilot_snr = link_budget_snr();
    if (s.data_snr == 0.0)
        s.data_snr = link_budget_snr();
    if (s.tap_spacing_s == 0.0)
        s.tap_spacing_s = delay_spread_s / 2.0;
    s.estimator = resolved_estimator();
    s.sinr_aggregation = resolved_aggregation();
    return s;
}

double pathloss_db(const Scenario &scenario, double distance_2d_m)
{
    const double h_bs = scenario.resolved_bs_height();
    const double h_ut = scenario.ue_height_m;
    const double dh = h_bs - h_ut;
    const double d3d = std::sqrt(distance_2d_m * distance_2d_m + dh * dh);
    const double fc_ghz = scenario.carrier_hz / 1e9;

    switch (scenario.pathloss)
    {
    case PathlossModel::uma_nlos:
    {
        const double los = los_pathloss(distance_2d_m, d3d, fc_ghz, h_bs, h_ut, 28.0, 22.0, 9.0);
        const double nlos = 13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) - 0.6 * (h_ut - 1.5);
        return std::max(los, nlos);
    }
    case PathlossModel::umi_nlos:
    {
        const double los = los_pathloss(distance_2d_m, d3d, fc_ghz, h_bs, h_ut, 32.4, 21.0, 9.5);
        const double nlos = 35.3 * std::log10(d3d) + 22.4 + 21.3 * std::log10(fc_ghz) - 0.3 * (h_ut - 1.5);
        return std::max(los, nlos);
    }
    case PathlossModel::log_distance:
        return scenario.log_distance_ref_db + 10.0 * scenario.log_distance_exponent * std::log10(std::max(d3d, 1.0));
    }
    return 0.0;
}

double large_scale_gain(const Scenario &scenario, double distance_2d_m, double shadowing_db)
{
    return db_to_linear(-pathloss_db(scenario, distance_2d_m) + shadowing_db);
}

UePopulation build_population(const Scenario &scenario, Rng &rng)
{
    const auto n = static_cast<std::size_t>(scenario.deployed_ues);
    UePopulation pop;
    pop.radius_m.resize(n);
    pop.angle_rad.resize(n);
    pop.beta.resize(n);

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> shadow(0.0, scenario.shadowing_std_db());
    const double r_max2 = scenario.cell_radius_m * scenario.cell_radius_m;
    const double r_min2 = scenario.min_distance_m * scenario.min_distance_m;

    for (std::size_t k = 0; k < n; ++k)
    {
        // area-uniform over the annulus [min_distance, radius]
        pop.radius_m[k] = std::sqrt(r_min2 + uniform(rng) * (r_max2 - r_min2));
        pop.angle_rad[k] = 2.0 * std::numbers::pi * uniform(rng);
        pop.beta[k] = large_scale_gain(scenario, pop.radius_m[k], shadow(rng));
    }

    apply_drop(pop, scenario.drop_fraction);

    if (scenario.power_control == PowerControl::open_loop)
    {
        pop.eta = open_loop_power_control(pop);
    }
    else
    {
        pop.eta.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            pop.eta[k] = pop.retained[k] ? 1.0 : 0.0;
    }
    return pop;
}

void apply_drop(UePopulation &population, double drop_fraction)
{
    const std::size_t n = population.size();
    const auto dropped = static_cast<std::size_t>(std::ceil(drop_fraction * static_cast<double>(n) - 1e-9));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return population.beta[a] < population.beta[b]; });
    population.retained.assign(n, true);
    for (std::size_t i = 0; i < dropped && i < n; ++i)
        population.retained[order[i]] = false;
}

std::vector<double> open_loop_power_control(const UePopulation &population)
{
    const std::size_t n = population.size();
    if (population.retained.size() != n)
        throw std::invalid_argument("population has no retained flags");

    double weakest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
        if (population.retained[k])
            weakest = std::min(weakest, population.beta[k]);
    if (!std::isfinite(weakest))
        throw std::invalid_argument("open-loop power control needs at least one retained UE");

    std::vector<double> eta(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        if (population.retained[k])
            eta[k] = std::min(1.0, weakest / population.beta[k]);
    return eta;
}

ActivityPattern draw_activity(const Scenario &scenario, Rng &rng)
{
    const int k_total = scenario.authorized_ues;
    int count = 0;
    if (scenario.mean_active_ues > 0.0)
    {
        std::poisson_distribution<int> poisson(scenario.mean_active_ues);
        count = std::min(poisson(rng), k_total);
    }

    // partial Fisher-Yates: the first `count` slots are a uniform subset
    std::vector<int> ues(static_cast<std::size_t>(k_total));
    std::iota(ues.begin(), ues.end(), 0);
    for (int i = 0; i < count; ++i)
    {
        std::uniform_int_distribution<int> pick(i, k_total - 1);
        std::swap(ues[static_cast<std::size_t>(i)], ues[static_cast<std::size_t>(pick(rng))]);
    }

    ActivityPattern pattern;
    pattern.active.assign(ues.begin(), ues.begin() + count);
    std::sort(pattern.active.begin(), pattern.active.end());
    pattern.indicator.assign(static_cast<std::size_t>(k_total), 0);
    for (int k : pattern.active)
        pattern.indicator[static_cast<std::size_t>(k)] = 1;
    return pattern;
}

AuthorizedUes authorize(const Scenario &scenario, const UePopulation &population)
{
    AuthorizedUes out;
    const auto k_total = static_cast<std::size_t>(scenario.authorized_ues);
    for (std::size_t i = 0; i < population.size() && out.population_index.size() < k_total; ++i)
    {
        if (!population.retained[i])
            continue;
        out.population_index.push_back(static_cast<int>(i));
        out.beta.push_back(population.beta[i]);
        out.eta.push_back(population.eta[i]);
    }
    if (out.population_index.size() < k_total)
        throw std::invalid_argument("not enough retained UEs to authorize K_total");
    return out;
}

} // namespace urllc
