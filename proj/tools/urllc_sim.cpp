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
#include "urllc/harness.hpp"
#include "urllc/output.hpp"

#include "CLI11.hpp"
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace
{

using urllc::Scenario;

// Scenario options shared by every subcommand.
struct ScenarioArgs
{
    std::string config;
    std::map<std::string, std::string> fields; // one flag per config key
    std::vector<std::string> sets;             // --set key=value
    std::optional<std::uint64_t> seed;
    std::string detector;
    std::string pilot_mode;

    void attach(CLI::App *app)
    {
        app->add_option("--config", config, "INI scenario file")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "run seed");
        app->add_option("--detector", detector, "np | ml | mmv | nnls | prb-ml | perfect");
        app->add_option("--pilot-mode", pilot_mode, "orthogonal-ci | gold-ci | gold-prb");
        app->add_option("--set", sets, "override any config key, key=value");
        for (const auto &field : urllc::config_fields())
        {
            const std::string key(field.key);
            app->add_option("--" + key, fields[key], std::string(field.help))->group("Scenario fields");
        }
    }

    Scenario build() const
    {
        Scenario s = config.empty() ? Scenario{} : urllc::load_config(config);
        for (const auto &[key, value] : fields)
            if (!value.empty())
                urllc::set_field(s, key, value);
        for (const auto &kv : sets)
        {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument(fmt::format("--set expects key=value, got '{}'", kv));
            urllc::set_field(s, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed)
            s.seed = *seed;
        if (!detector.empty())
            s.detector = urllc::parse_detector(detector);
        if (!pilot_mode.empty())
            s.pilot_mode = urllc::parse_pilot_mode(pilot_mode);
        return s;
    }
};

void print_summary(const urllc::RunResult &r)
{
    std::cout << fmt::format("trials={} samples={} P_MD={:.3e} P_FA={:.3e} threshold={:.6g} wall={:.1f}s\n",
                             r.trials, r.throughput.size(), r.p_md(), r.p_fa(), r.threshold, r.wall_seconds);
    for (const auto &q : r.quantiles)
        std::cout << fmt::format("  q{:g} = {:.4f} Mbps{}\n", q.level, q.value / 1e6,
                                 q.reliable ? "" : " (unreliable)");
}

urllc::RunResult load_or_run(const std::string &path, std::uint64_t trials, int workers)
{
    if (std::filesystem::is_directory(path))
        return urllc::read_run_directory(path);
    return urllc::run(urllc::load_config(path), {trials, 0, workers});
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Grant-free massive MIMO uplink link-level simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    int workers = 0;
    app.add_option("--workers", workers, "worker threads (0 = all cores)");

    auto *run_cmd = app.add_subcommand("run", "Monte-Carlo run of one scenario");
    ScenarioArgs run_args;
    run_args.attach(run_cmd);
    std::uint64_t trials = 1000;
    std::uint64_t first_trial = 0;
    std::string out_dir;
    run_cmd->add_option("--trials", trials, "trial count");
    run_cmd->add_option("--first-trial", first_trial, "index of the first trial");
    run_cmd->add_option("--out", out_dir, "output directory");

    auto *cal_cmd = app.add_subcommand("calibrate", "calibrate the detection threshold");
    ScenarioArgs cal_args;
    cal_args.attach(cal_cmd);
    std::uint64_t cal_trials = 0;
    cal_cmd->add_option("--trials", cal_trials, "calibration trials (default: calibration_trials)");

    auto *cmp_cmd = app.add_subcommand("compare", "compare runs and check ordering assertions");
    std::vector<std::string> runs;
    std::vector<std::string> assertions;
    std::uint64_t cmp_trials = 1000;
    cmp_cmd->add_option("--run", runs, "name=PATH, a run directory or an INI scenario")->required();
    cmp_cmd->add_option("--assert", assertions, "e.g. a>=b@q0.01, a~b@q0.01:0.1, a>b@pmd");
    cmp_cmd->add_option("--trials", cmp_trials, "trials for INI scenarios");

    auto *sweep_cmd = app.add_subcommand("sweep", "run one scenario over a list of values of one key");
    ScenarioArgs sweep_args;
    sweep_args.attach(sweep_cmd);
    std::string param;
    std::vector<std::string> values;
    std::uint64_t sweep_trials = 1000;
    std::string sweep_out;
    sweep_cmd->add_option("--param", param, "config key to vary")->required();
    sweep_cmd->add_option("--values", values, "values of the key")->required()->delimiter(',');
    sweep_cmd->add_option("--trials", sweep_trials, "trials per point");
    sweep_cmd->add_option("--out", sweep_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (run_cmd->parsed())
        {
            const auto result = urllc::run(run_args.build(), {trials, first_trial, workers});
            print_summary(result);
            if (!out_dir.empty())
                urllc::write_run_directory(result, out_dir);
            return 0;
        }
        if (cal_cmd->parsed())
        {
            Scenario s = cal_args.build().resolved();
            const std::uint64_t n = cal_trials > 0 ? cal_trials : static_cast<std::uint64_t>(s.calibration_trials);
            const double t = urllc::calibrate_threshold(s.detector, s, s.p_fa, n, workers);
            std::cout << fmt::format("detector={} p_fa={:g} trials={} threshold={:.17g}\n",
                                     urllc::to_string(s.detector), s.p_fa, n, t);
            if (s.detector == urllc::DetectorId::np)
                std::cout << fmt::format("closed_form={:.17g}\n", urllc::np_threshold(s.p_fa, s.antennas, s.subbands));
            if (!s.calibration_cache.empty())
                urllc::ThresholdCache(s.calibration_cache).store(s.detector, urllc::scenario_hash(s), s.p_fa, t);
            return 0;
        }
        if (cmp_cmd->parsed())
        {
            std::vector<urllc::NamedResult> results;
            for (const auto &entry : runs)
            {
                const auto eq = entry.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument(fmt::format("--run expects name=PATH, got '{}'", entry));
                results.push_back({entry.substr(0, eq), load_or_run(entry.substr(eq + 1), cmp_trials, workers)});
            }
            std::vector<urllc::Assertion> parsed;
            for (const auto &a : assertions)
                parsed.push_back(urllc::parse_assertion(a));
            const auto report = urllc::compare_scenarios(results, parsed);
            for (const auto &d : report.deltas)
                std::cout << fmt::format("{} q{:g} = {:.4f} Mbps (delta {:+.4f})\n", d.name, d.level, d.value / 1e6,
                                         d.delta / 1e6);
            for (const auto &r : results)
                std::cout << fmt::format("{} P_MD = {:.3e} P_FA = {:.3e}\n", r.name, r.result.p_md(), r.result.p_fa());
            for (const auto &o : report.outcomes)
                std::cout << fmt::format("{} {}: {:.6g} vs {:.6g}\n", o.passed ? "PASS" : "FAIL", o.assertion.text,
                                         o.lhs_value, o.rhs_value);
            return report.passed() ? 0 : 1;
        }
        if (sweep_cmd->parsed())
        {
            const Scenario base = sweep_args.build();
            std::ofstream table;
            if (!sweep_out.empty())
            {
                std::filesystem::create_directories(sweep_out);
                table.open(std::filesystem::path(sweep_out) / "sweep.csv");
                table << param << ",p_md,p_fa";
                for (double q : base.quantile_levels)
                    table << fmt::format(",q{:g}", q);
                table << '\n';
            }
            for (const auto &v : values)
            {
                Scenario s = base;
                urllc::set_field(s, param, v);
                const auto result = urllc::run(s, {sweep_trials, 0, workers});
                std::cout << param << " = " << v << ": ";
                print_summary(result);
                if (!sweep_out.empty())
                {
                    urllc::write_run_directory(result, std::filesystem::path(sweep_out) / (param + "_" + v));
                    table << fmt::format("{},{:.9g},{:.9g}", v, result.p_md(), result.p_fa());
                    for (const auto &q : result.quantiles)
                        table << fmt::format(",{:.3f}", q.value);
                    table << '\n';
                }
            }
            return 0;
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
