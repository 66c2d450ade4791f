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

#include "urllc/output.hpp"
#include "urllc/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace urllc
{

namespace
{

std::string sinr_db_text(double sinr)
{
    if (!(sinr > 0.0))
        return "-inf";
    return fmt::format("{:.6f}", linear_to_db(sinr));
}

UeLabel parse_label(const std::string &s)
{
    for (UeLabel l : {UeLabel::detected_active, UeLabel::misdetected, UeLabel::false_alarm, UeLabel::true_inactive})
        if (to_string(l) == s)
            return l;
    throw std::invalid_argument(fmt::format("unknown UE label '{}'", s));
}

std::ofstream open_out(const std::filesystem::path &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    return out;
}

} // namespace

void write_samples_csv(const RunResult &result, std::ostream &out)
{
    out << "trial,ue,beta,eta,label,sinr_db,throughput_bps\n";
    for (const auto &s : result.samples)
        out << fmt::format("{},{},{:.9e},{:.9g},{},{},{:.3f}\n", s.trial, s.ue, s.beta, s.eta, to_string(s.label),
                           sinr_db_text(s.sinr), s.throughput);
}

void write_summary(const RunResult &result, std::ostream &out)
{
    const Scenario &s = result.scenario;
    auto line = [&](std::string_view key, const std::string &value) { out << key << '=' << value << '\n'; };
    line("trials", std::to_string(result.trials));
    line("first_trial", std::to_string(result.first_trial));
    line("seed", std::to_string(s.seed));
    line("scenario_hash", fmt::format("{:016x}", result.hash));
    line("pilot_mode", std::string(to_string(s.pilot_mode)));
    line("detector", std::string(to_string(s.detector)));
    line("estimator", std::string(to_string(s.estimator)));
    line("threshold", fmt::format("{:.17g}", result.threshold));
    line("rho_p", fmt::format("{:.17g}", s.pilot_snr));
    line("rho_u", fmt::format("{:.17g}", s.data_snr));
    line("small_scale_variance", fmt::format("{:.17g}", result.small_scale_variance));
    line("samples", std::to_string(result.throughput.size()));
    line("active", std::to_string(result.active));
    line("misdetected", std::to_string(result.misdetected));
    line("false_alarms", std::to_string(result.false_alarms));
    line("inactive", std::to_string(result.inactive));
    line("p_md", fmt::format("{:.9g}", result.p_md()));
    line("p_fa", fmt::format("{:.9g}", result.p_fa()));
    line("mean_iterations", fmt::format("{:.6g}", result.mean_iterations));
    line("quantile_levels", get_field(s, "quantile_levels"));
    for (const auto &q : result.quantiles)
    {
        line(fmt::format("quantile_{:g}", q.level), fmt::format("{:.6f}", q.value));
        line(fmt::format("quantile_{:g}_reliable", q.level), q.reliable ? "true" : "false");
    }
    line("wall_seconds", fmt::format("{:.3f}", result.wall_seconds));
}

void write_cdf_csv(const RunResult &result, std::ostream &out, std::size_t max_points)
{
    out << "probability,throughput_bps\n";
    for (const auto &[value, p] : empirical_cdf(result.throughput, max_points))
        out << fmt::format("{:.9g},{:.3f}\n", p, value);
}

void write_run_directory(const RunResult &result, const std::filesystem::path &dir)
{
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "samples.csv");
        write_samples_csv(result, out);
    }
    {
        auto out = open_out(dir / "summary.txt");
        write_summary(result, out);
    }
    {
        auto out = open_out(dir / "cdf.csv");
        write_cdf_csv(result, out);
    }
    {
        auto out = open_out(dir / "scenario.ini");
        write_config(result.scenario, out);
    }
}

std::map<std::string, std::string> read_summary(std::istream &in)
{
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line))
    {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

RunResult read_run_directory(const std::filesystem::path &dir)
{
    RunResult r;
    r.scenario = load_config((dir / "scenario.ini").string());

    std::ifstream summary_in(dir / "summary.txt");
    if (!summary_in)
        throw std::runtime_error(fmt::format("missing summary.txt in {}", dir.string()));
    const auto kv = read_summary(summary_in);
    auto get = [&](const std::string &key) -> const std::string & {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw std::runtime_error(fmt::format("summary.txt lacks '{}'", key));
        return it->second;
    };
    r.trials = std::stoull(get("trials"));
    r.first_trial = std::stoull(get("first_trial"));
    r.hash = std::stoull(get("scenario_hash"), nullptr, 16);
    r.threshold = std::stod(get("threshold"));
    r.small_scale_variance = std::stod(get("small_scale_variance"));
    r.active = std::stoull(get("active"));
    r.misdetected = std::stoull(get("misdetected"));
    r.false_alarms = std::stoull(get("false_alarms"));
    r.inactive = std::stoull(get("inactive"));
    r.mean_iterations = std::stod(get("mean_iterations"));
    r.wall_seconds = std::stod(get("wall_seconds"));

    std::ifstream samples_in(dir / "samples.csv");
    if (!samples_in)
        throw std::runtime_error(fmt::format("missing samples.csv in {}", dir.string()));
    std::string line;
    std::getline(samples_in, line);
    while (std::getline(samples_in, line))
    {
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string cell[7];
        for (auto &c : cell)
            std::getline(row, c, ',');
        UeSample s;
        s.trial = std::stoull(cell[0]);
        s.ue = std::stoi(cell[1]);
        s.beta = std::stod(cell[2]);
        s.eta = std::stod(cell[3]);
        s.label = parse_label(cell[4]);
        s.sinr = cell[5] == "-inf" ? 0.0 : db_to_linear(std::stod(cell[5]));
        s.throughput = std::stod(cell[6]);
        r.samples.push_back(s);
    }
    summarize(r);
    return r;
}

} // namespace urllc
