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

#include "urllc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <type_traits>

namespace urllc
{

namespace
{

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string &raw, std::string_view key)
{
    const std::string text = trim(raw);
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty())
        throw std::invalid_argument(fmt::format("invalid value '{}' for {}", raw, key));
    return value;
}

bool parse_bool(const std::string &raw, std::string_view key)
{
    const std::string text = trim(raw);
    if (text == "true" || text == "1" || text == "yes")
        return true;
    if (text == "false" || text == "0" || text == "no")
        return false;
    throw std::invalid_argument(fmt::format("invalid boolean '{}' for {}", raw, key));
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

template <typename T>
ConfigField number(std::string_view section, std::string_view key, std::string_view help, T Scenario::*member,
                   bool hashed = true)
{
    return {section, key, help, hashed,
            [member](const Scenario &s) {
                if constexpr (std::is_floating_point_v<T>)
                    return format_double(s.*member);
                else
                    return std::to_string(s.*member);
            },
            [member, key](Scenario &s, const std::string &v) { s.*member = parse_number<T>(v, key); }};
}

template <typename E>
ConfigField choice(std::string_view section, std::string_view key, std::string_view help, E Scenario::*member,
                   E (*parse)(std::string_view))
{
    return {section, key, help, true, [member](const Scenario &s) { return std::string(to_string(s.*member)); },
            [member, parse](Scenario &s, const std::string &v) { s.*member = parse(trim(v)); }};
}

std::vector<ConfigField> build_fields()
{
    using S = Scenario;
    std::vector<ConfigField> f;
    f.push_back(number("system", "M", "BS antennas", &S::antennas));
    f.push_back(number("system", "K_total", "authorized UEs (pilots)", &S::authorized_ues));
    f.push_back(number("system", "K_pop", "deployed UEs before dropping", &S::deployed_ues));
    f.push_back(number("system", "lambda_active", "mean active-UE count", &S::mean_active_ues));
    f.push_back(number("system", "tau_c", "coherence interval in symbols", &S::coherence_symbols));
    f.push_back(number("system", "tau", "pilot length in symbols", &S::pilot_length));
    f.push_back(number("system", "N", "independent subbands (0 = derive)", &S::subbands));
    f.push_back(number("system", "bandwidth_hz", "system bandwidth", &S::bandwidth_hz));
    f.push_back(number("system", "subcarrier_spacing_hz", "subcarrier spacing", &S::subcarrier_spacing_hz));

    f.push_back(number("cell", "cell_radius_m", "cell radius", &S::cell_radius_m));
    f.push_back(number("cell", "min_distance_m", "minimum BS-UE distance", &S::min_distance_m));
    f.push_back(choice("cell", "pathloss_model_id", "uma-nlos | umi-nlos | log-distance", &S::pathloss,
                       &parse_pathloss_model));
    f.push_back(number("cell", "carrier_hz", "carrier frequency", &S::carrier_hz));
    f.push_back(number("cell", "bs_height_m", "BS height (0 = preset)", &S::bs_height_m));
    f.push_back(number("cell", "ue_height_m", "UE height", &S::ue_height_m));
    f.push_back(number("cell", "shadowing_db", "shadowing std (negative = preset)", &S::shadowing_db));
    f.push_back(number("cell", "log_distance_ref_db", "log-distance loss at 1 m", &S::log_distance_ref_db));
    f.push_back(number("cell", "log_distance_exponent", "log-distance exponent", &S::log_distance_exponent));

    f.push_back(number("link", "tx_power_dbm", "UE transmit power", &S::tx_power_dbm));
    f.push_back(number("link", "noise_density_dbm_hz", "noise power spectral density", &S::noise_density_dbm_hz));
    f.push_back(number("link", "noise_figure_db", "BS noise figure", &S::noise_figure_db));
    f.push_back(number("link", "rho_p", "pilot SNR, linear (0 = link budget)", &S::pilot_snr));
    f.push_back(number("link", "rho_u", "data SNR, linear (0 = link budget)", &S::data_snr));

    f.push_back(choice("channel", "channel_model", "iid | surrogate", &S::channel, &parse_channel_model));
    f.push_back(number("channel", "delay_spread_s", "RMS delay spread", &S::delay_spread_s));
    f.push_back(number("channel", "tap_spacing_s", "tap spacing (0 = delay spread / 2)", &S::tap_spacing_s));
    f.push_back(number("channel", "tap_count", "taps (0 = up to 8 delay spreads)", &S::tap_count));
    f.push_back(number("channel", "antenna_correlation", "AR(1) antenna correlation", &S::antenna_correlation));
    f.push_back(number("channel", "small_scale_variance", "var of small-scale fading (0 = calibrate)",
                       &S::small_scale_variance));
    f.push_back(choice("channel", "covariance_mode", "analytic | sample", &S::covariance_mode,
                       &parse_covariance_mode));
    f.push_back(number("channel", "covariance_draws", "draws for the sample covariance", &S::covariance_draws));

    f.push_back(choice("pilots", "pilot_mode", "orthogonal-ci | gold-ci | gold-prb", &S::pilot_mode,
                       &parse_pilot_mode));
    f.push_back(number("pilots", "gold_cinit_offset", "c_init of UE 0", &S::gold_cinit_offset));

    f.push_back(choice("detection", "detector_id", "np | ml | mmv | nnls | prb-ml | perfect", &S::detector,
                       &parse_detector));
    f.push_back(number("detection", "p_fa", "target false-alarm probability", &S::p_fa));
    f.push_back(number("detection", "max_sweeps", "coordinate-descent sweep budget", &S::max_sweeps));
    f.push_back(number("detection", "sweep_tolerance", "stop when max |d| falls below", &S::sweep_tolerance));
    f.push_back(number("detection", "calibration_trials", "trials for threshold calibration",
                       &S::calibration_trials));
    f.push_back(number("detection", "threshold", "fixed threshold (0 = closed form or calibrate)", &S::threshold,
                       false));
    f.push_back({"detection", "calibration_cache", "threshold cache file", false,
                 [](const Scenario &s) { return s.calibration_cache; },
                 [](Scenario &s, const std::string &v) { s.calibration_cache = trim(v); }});

    f.push_back(choice("estimation", "estimator_id", "auto | ci-diag | ci-per-ue | prb", &S::estimator,
                       &parse_estimator));

    f.push_back(choice("power", "power_control", "full-power | open-loop", &S::power_control,
                       &parse_power_control));
    f.push_back(number("power", "drop_fraction", "fraction of weakest UEs dropped", &S::drop_fraction));

    f.push_back(number("run", "rng_seed", "run seed", &S::seed, false));
    f.push_back({"run", "redraw_population", "redraw UE positions every trial", true,
                 [](const Scenario &s) { return std::string(s.redraw_population ? "true" : "false"); },
                 [](Scenario &s, const std::string &v) { s.redraw_population = parse_bool(v, "redraw_population"); }});
    f.push_back(choice("run", "sinr_aggregation", "auto | first | mean | min", &S::sinr_aggregation,
                       &parse_sinr_aggregation));
    f.push_back(choice("run", "prb_sinr_subcarriers", "pilot | all", &S::prb_sinr_subcarriers,
                       &parse_prb_sinr_subcarriers));
    f.push_back({"run", "quantile_levels", "comma-separated report levels", false,
                 [](const Scenario &s) {
                     std::string out;
                     for (std::size_t i = 0; i < s.quantile_levels.size(); ++i)
                         out += (i ? "," : "") + format_double(s.quantile_levels[i]);
                     return out;
                 },
                 [](Scenario &s, const std::string &v) {
                     std::vector<double> levels;
                     std::size_t start = 0;
                     while (start <= v.size())
                     {
                         const auto comma = v.find(',', start);
                         const auto item = v.substr(start, comma == std::string::npos ? std::string::npos
                                                                                      : comma - start);
                         levels.push_back(parse_number<double>(item, "quantile_levels"));
                         if (comma == std::string::npos)
                             break;
                         start = comma + 1;
                     }
                     s.quantile_levels = std::move(levels);
                 }});
    return f;
}

const ConfigField &find_field(std::string_view key)
{
    for (const auto &field : config_fields())
        if (field.key == key)
            return field;
    throw std::invalid_argument(fmt::format("unknown config key '{}'", key));
}

} // namespace

const std::vector<ConfigField> &config_fields()
{
    static const std::vector<ConfigField> fields = build_fields();
    return fields;
}

void set_field(Scenario &scenario, std::string_view key, const std::string &value)
{
    find_field(key).set(scenario, value);
}

std::string get_field(const Scenario &scenario, std::string_view key)
{
    return find_field(key).get(scenario);
}

Scenario parse_config(std::istream &in, Scenario base)
{
    boost::property_tree::ptree tree;
    boost::property_tree::read_ini(in, tree);
    for (const auto &[name, node] : tree)
    {
        if (node.empty())
        {
            set_field(base, name, node.data());
            continue;
        }
        for (const auto &[key, value] : node)
            set_field(base, key, value.data());
    }
    return base;
}

Scenario load_config(const std::string &path, Scenario base)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open config {}", path));
    try
    {
        return parse_config(in, std::move(base));
    }
    catch (const boost::property_tree::ini_parser_error &e)
    {
        throw std::runtime_error(fmt::format("{}: {}", path, e.message()));
    }
}

void write_config(const Scenario &scenario, std::ostream &out)
{
    std::string_view section;
    for (const auto &field : config_fields())
    {
        if (field.section != section)
        {
            out << (section.empty() ? "" : "\n") << '[' << field.section << "]\n";
            section = field.section;
        }
        out << field.key << " = " << field.get(scenario) << '\n';
    }
}

std::string canonical_config(const Scenario &scenario)
{
    std::string out;
    for (const auto &field : config_fields())
        if (field.hashed)
            out += fmt::format("{}={}\n", field.key, field.get(scenario));
    return out;
}

std::uint64_t scenario_hash(const Scenario &scenario)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_config(scenario.resolved()))
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace urllc
