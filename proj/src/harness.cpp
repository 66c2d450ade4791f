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

#include "urllc/harness.hpp"
#include "urllc/config.hpp"
#include "urllc/estimation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace urllc
{

namespace
{

// Scenario-level quantities are drawn from fixed streams so they do not
// depend on the run seed.
constexpr std::uint64_t scenario_stream_seed = 0x5eed;

Scenario checked(const Scenario &scenario)
{
    scenario.validate();
    Scenario s = scenario.resolved();
    s.validate();
    return s;
}

CMatrix gather_columns(const CMatrix &m, std::span<const int> columns)
{
    CMatrix out(m.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = m.col(columns[j]);
    return out;
}

int resolve_workers(int workers)
{
    if (workers > 0)
        return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

double RunResult::p_md() const
{
    return active == 0 ? 0.0 : static_cast<double>(misdetected) / static_cast<double>(active);
}

double RunResult::p_fa() const
{
    return inactive == 0 ? 0.0 : static_cast<double>(false_alarms) / static_cast<double>(inactive);
}

Simulator::Simulator(const Scenario &scenario)
    : scenario_(checked(scenario)), pilots_(make_pilots(scenario_)), generator_(scenario_)
{
    if (scenario_.small_scale_variance > 0.0)
        variance_ = scenario_.small_scale_variance;
    else
    {
        Rng rng = make_stream(scenario_stream_seed, 0, StreamPurpose::variance_calibration);
        variance_ = calibrate_small_scale_variance(scenario_, rng);
    }
    if (scenario_.pilot_mode == PilotMode::gold_prb)
    {
        Rng rng = make_stream(scenario_stream_seed, 0, StreamPurpose::covariance);
        unit_covariance_ =
            pilot_subcarrier_covariance(scenario_, scenario_.covariance_mode, rng, scenario_.covariance_draws);
    }
}

TrialDraw Simulator::draw(std::uint64_t trial) const
{
    const Scenario &s = scenario_;
    TrialDraw d;

    Rng pop_rng = make_stream(s.seed, s.redraw_population ? trial : 0, StreamPurpose::population);
    d.ues = authorize(s, build_population(s, pop_rng));

    Rng act_rng = make_stream(s.seed, trial, StreamPurpose::activity);
    d.activity = draw_activity(s, act_rng);
    const UeSet &active = d.activity.active;

    d.channels = generator_.empty(s.authorized_ues);
    for (int k : active)
    {
        Rng ch_rng = make_stream(s.seed, trial, StreamPurpose::channel, static_cast<std::uint64_t>(k));
        generator_.draw_ue(ch_rng, d.ues.beta[static_cast<std::size_t>(k)], k, d.channels);
    }

    std::vector<double> amp;
    for (int k : active)
        amp.push_back(std::sqrt(s.pilot_length * s.pilot_snr * d.ues.eta[static_cast<std::size_t>(k)]));
    const CMatrix pa = select_pilots(pilots_, active, amp);

    Rng noise_rng = make_stream(s.seed, trial, StreamPurpose::noise);
    ComplexGaussian cn;
    const int m = s.antennas;
    if (s.pilot_mode == PilotMode::gold_prb)
    {
        d.received.resize(prb_pilot_length, m);
        cn.fill(d.received, noise_rng);
        if (active.empty())
            return d;
        for (int b = 0; b < prb_pilot_blocks; ++b)
        {
            const CMatrix g = gather_columns(d.channels.unit(prb_pilot_subcarrier(b)), active);
            d.received.middleRows(b * prb_block_symbols, prb_block_symbols).noalias() +=
                pa.middleRows(b * prb_block_symbols, prb_block_symbols) * g.transpose();
        }
        return d;
    }

    const int n = s.subbands;
    d.received.resize(s.pilot_length, static_cast<Eigen::Index>(m) * n);
    cn.fill(d.received, noise_rng);
    if (active.empty())
        return d;
    for (int f = 0; f < n; ++f)
    {
        const CMatrix g = gather_columns(d.channels.unit(f), active);
        d.received.middleCols(static_cast<Eigen::Index>(f) * m, m).noalias() += pa * g.transpose();
    }
    return d;
}

DetectionProblem Simulator::detection_problem(const TrialDraw &draw) const
{
    DetectionProblem p;
    p.received = draw.received;
    p.pilots = &pilots_;
    p.antennas = scenario_.antennas;
    if (scenario_.pilot_mode == PilotMode::gold_prb)
    {
        p.subbands = 1;
        p.subcarrier_covariance.assign(static_cast<std::size_t>(pilots_.ues()), unit_covariance_);
    }
    else
        p.subbands = scenario_.subbands;
    return p;
}

TrialOutcome Simulator::run_trial(std::uint64_t trial) const
{
    const Scenario &s = scenario_;
    const TrialDraw d = draw(trial);
    const UeSet &active = d.activity.active;
    const auto k_total = static_cast<std::size_t>(s.authorized_ues);

    Rng det_rng = make_stream(s.seed, trial, StreamPurpose::detection);
    const DescentOptions options{s.max_sweeps, s.sweep_tolerance};
    const DetectionResult detection = detect(s.detector, detection_problem(d), threshold_, options, det_rng, active);
    const UeSet &detected = detection.detected;

    const bool first_only = s.sinr_aggregation == SinrAggregation::first;
    const bool prb = s.pilot_mode == PilotMode::gold_prb;
    // with first-unit aggregation only subband 0 needs an estimate
    const CMatrix received = !prb && first_only ? CMatrix(d.received.leftCols(s.antennas)) : d.received;

    EstimationInput in;
    in.received = &received;
    in.pilots = &pilots_;
    in.detected = detected;
    in.pilot_snr = s.pilot_snr;
    in.antennas = s.antennas;
    in.subbands = prb ? 1 : static_cast<int>(received.cols() / s.antennas);
    for (std::size_t k = 0; k < k_total; ++k)
    {
        in.amplitude.push_back(std::sqrt(d.ues.eta[k]));
        in.prior.push_back(d.ues.beta[k] * variance_);
        if (prb)
            in.covariance.push_back(d.ues.beta[k] * unit_covariance_);
    }
    const ChannelEstimate estimate = estimate_channels(s.estimator, in);

    // (estimate unit, channel unit) pairs the SINR is evaluated on
    std::vector<std::pair<int, int>> units;
    if (prb)
    {
        const bool all = s.prb_sinr_subcarriers == PrbSinrSubcarriers::all;
        for (int f = 0; f < prb_subcarriers; f += all ? 1 : 2)
        {
            units.emplace_back(f / 2, f);
            if (first_only)
                break;
        }
    }
    else
    {
        for (int f = 0; f < s.subbands; ++f)
        {
            units.emplace_back(f, f);
            if (first_only)
                break;
        }
    }

    RVector sinr = RVector::Zero(static_cast<Eigen::Index>(k_total));
    if (!detected.empty())
    {
        if (s.sinr_aggregation == SinrAggregation::min)
            sinr.setConstant(std::numeric_limits<double>::infinity());
        for (const auto &[e, f] : units)
        {
            const CMatrix v = build_mmse_receiver(estimate.units[static_cast<std::size_t>(e)], d.ues.eta, s.data_snr,
                                                  detected);
            const RVector x = instantaneous_sinr(v, d.channels.unit(f), d.ues.eta, s.data_snr, active, detected);
            if (s.sinr_aggregation == SinrAggregation::min)
                sinr = sinr.cwiseMin(x);
            else
                sinr += x;
        }
        if (s.sinr_aggregation == SinrAggregation::mean)
            sinr /= static_cast<double>(units.size());
    }

    TrialOutcome out;
    out.iterations = detection.iterations;
    out.active = active.size();
    out.inactive = k_total - active.size();
    std::vector<std::uint8_t> in_b(k_total, 0);
    for (int k : detected)
        in_b[static_cast<std::size_t>(k)] = 1;
    for (std::size_t k = 0; k < k_total; ++k)
    {
        const bool a = d.activity.indicator[k] != 0;
        const bool b = in_b[k] != 0;
        const UeLabel label = classify(a, b);
        if (label == UeLabel::true_inactive)
            continue;
        UeSample sample;
        sample.trial = trial;
        sample.ue = static_cast<int>(k);
        sample.beta = d.ues.beta[k];
        sample.eta = d.ues.eta[k];
        sample.label = label;
        if (label == UeLabel::detected_active)
        {
            sample.sinr = sinr(static_cast<Eigen::Index>(k));
            sample.throughput = effective_throughput(sample.sinr, s);
        }
        else if (label == UeLabel::misdetected)
            ++out.misdetected;
        else
            ++out.false_alarms;
        out.samples.push_back(sample);
    }
    return out;
}

std::vector<double> Simulator::null_statistics(std::uint64_t trial) const
{
    if (scenario_.detector == DetectorId::perfect)
        throw std::invalid_argument("perfect detection has no null statistics");
    const TrialDraw d = draw(trial);
    Rng det_rng = make_stream(scenario_.seed, trial, StreamPurpose::detection);
    const DescentOptions options{scenario_.max_sweeps, scenario_.sweep_tolerance};
    const RVector stat = detection_statistic(scenario_.detector, detection_problem(d), options, det_rng);
    std::vector<double> out;
    for (std::size_t k = 0; k < d.activity.indicator.size(); ++k)
        if (d.activity.indicator[k] == 0)
            out.push_back(stat(static_cast<Eigen::Index>(k)));
    return out;
}

void parallel_for(std::uint64_t count, int workers, const std::function<void(std::uint64_t)> &fn)
{
    const auto threads = static_cast<std::uint64_t>(resolve_workers(workers));
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto body = [&]() {
        while (!failed.load())
        {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                const std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                failed = true;
            }
        }
    };

    if (threads <= 1 || count <= 1)
        body();
    else
    {
        std::vector<std::thread> pool;
        for (std::uint64_t t = 0; t < std::min(threads, count); ++t)
            pool.emplace_back(body);
        for (auto &t : pool)
            t.join();
    }
    if (error)
        std::rethrow_exception(error);
}

std::vector<double> collect_null_statistics(const Scenario &scenario, std::uint64_t trials, int workers)
{
    Scenario c = scenario;
    c.seed = derive_seed(scenario.seed, 0, StreamPurpose::threshold_calibration);
    const Simulator sim(c);
    std::vector<std::vector<double>> per_trial(trials);
    parallel_for(trials, workers, [&](std::uint64_t i) {
        try
        {
            per_trial[i] = sim.null_statistics(i);
        }
        catch (const std::exception &e)
        {
            throw std::runtime_error(fmt::format("calibration trial {}: {}", i, e.what()));
        }
    });
    std::vector<double> all;
    for (const auto &v : per_trial)
        all.insert(all.end(), v.begin(), v.end());
    return all;
}

double calibrate_threshold(DetectorId detector, const Scenario &scenario, double p_fa, std::uint64_t trials,
                           int workers)
{
    Scenario c = scenario;
    c.detector = detector;
    std::vector<double> stats = collect_null_statistics(c, trials, workers);
    if (static_cast<double>(stats.size()) < 100.0 / p_fa)
        std::cerr << fmt::format("warning: {} null samples are fewer than the recommended {:.0f}\n", stats.size(),
                                 100.0 / p_fa);
    return empirical_threshold(std::move(stats), p_fa);
}

double resolve_threshold(const Scenario &scenario, int workers)
{
    const Scenario s = checked(scenario);
    if (s.detector == DetectorId::perfect)
        return 0.0;
    if (s.threshold > 0.0)
        return s.threshold;
    if (s.detector == DetectorId::np)
        return np_threshold(s.p_fa, s.antennas, s.subbands);

    const std::uint64_t hash = scenario_hash(s);
    if (!s.calibration_cache.empty())
        if (const auto cached = ThresholdCache(s.calibration_cache).lookup(s.detector, hash, s.p_fa))
            return *cached;
    const double t =
        calibrate_threshold(s.detector, s, s.p_fa, static_cast<std::uint64_t>(s.calibration_trials), workers);
    if (!s.calibration_cache.empty())
        ThresholdCache(s.calibration_cache).store(s.detector, hash, s.p_fa, t);
    return t;
}

void summarize(RunResult &result)
{
    result.throughput.clear();
    for (const auto &sample : result.samples)
        if (sample.label == UeLabel::detected_active || sample.label == UeLabel::misdetected)
            result.throughput.push_back(sample.throughput);
    std::sort(result.throughput.begin(), result.throughput.end());
    result.quantiles.clear();
    for (double level : result.scenario.quantile_levels)
    {
        QuantileRow row;
        row.level = level;
        if (!result.throughput.empty())
        {
            const auto q = sorted_quantile(result.throughput, level);
            row.value = q.value;
            row.reliable = q.reliable;
        }
        else
            row.reliable = false;
        result.quantiles.push_back(row);
    }
}

RunResult run(const Scenario &scenario, const RunOptions &options)
{
    const auto start = std::chrono::steady_clock::now();
    Simulator sim(scenario);
    sim.set_threshold(resolve_threshold(sim.scenario(), options.workers));

    std::vector<TrialOutcome> outcomes(options.trials);
    parallel_for(options.trials, options.workers, [&](std::uint64_t i) {
        const std::uint64_t trial = options.first_trial + i;
        try
        {
            outcomes[i] = sim.run_trial(trial);
        }
        catch (const std::exception &e)
        {
            throw std::runtime_error(fmt::format("trial {}: {}", trial, e.what()));
        }
    });

    RunResult r;
    r.scenario = sim.scenario();
    r.trials = options.trials;
    r.first_trial = options.first_trial;
    r.threshold = sim.threshold();
    r.small_scale_variance = sim.small_scale_variance();
    r.hash = scenario_hash(sim.scenario());
    double iterations = 0.0;
    for (auto &o : outcomes)
    {
        r.active += o.active;
        r.misdetected += o.misdetected;
        r.false_alarms += o.false_alarms;
        r.inactive += o.inactive;
        iterations += o.iterations;
        r.samples.insert(r.samples.end(), o.samples.begin(), o.samples.end());
    }
    r.mean_iterations = options.trials > 0 ? iterations / static_cast<double>(options.trials) : 0.0;
    summarize(r);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

RunResult merge_results(const RunResult &first, const RunResult &second)
{
    if (first.hash != second.hash)
        throw std::invalid_argument("cannot merge runs of different scenarios");
    if (first.scenario.seed != second.scenario.seed)
        throw std::invalid_argument("cannot merge runs with different seeds");
    const bool disjoint = first.first_trial + first.trials <= second.first_trial ||
                          second.first_trial + second.trials <= first.first_trial;
    if (!disjoint)
        throw std::invalid_argument("merged runs must cover disjoint trial ranges");

    RunResult r = first;
    r.first_trial = std::min(first.first_trial, second.first_trial);
    r.trials = first.trials + second.trials;
    r.active += second.active;
    r.misdetected += second.misdetected;
    r.false_alarms += second.false_alarms;
    r.inactive += second.inactive;
    r.wall_seconds += second.wall_seconds;
    r.mean_iterations = r.trials > 0 ? (first.mean_iterations * static_cast<double>(first.trials) +
                                        second.mean_iterations * static_cast<double>(second.trials)) /
                                           static_cast<double>(r.trials)
                                     : 0.0;
    r.samples.insert(r.samples.end(), second.samples.begin(), second.samples.end());
    std::stable_sort(r.samples.begin(), r.samples.end(), [](const UeSample &a, const UeSample &b) {
        return a.trial != b.trial ? a.trial < b.trial : a.ue < b.ue;
    });
    summarize(r);
    return r;
}

Assertion parse_assertion(std::string_view text)
{
    Assertion a;
    a.text = std::string(text);
    const auto at = text.find('@');
    if (at == std::string_view::npos)
        throw std::invalid_argument(fmt::format("assertion '{}' lacks '@metric'", text));
    const std::string_view lhs_rhs = text.substr(0, at);
    std::string_view metric = text.substr(at + 1);

    struct OpName
    {
        std::string_view token;
        CompareOp op;
    };
    constexpr OpName ops[] = {{">=", CompareOp::greater_equal}, {"<=", CompareOp::less_equal},
                              {">", CompareOp::greater},        {"<", CompareOp::less},
                              {"~", CompareOp::close}};
    bool found = false;
    for (const auto &o : ops)
    {
        const auto pos = lhs_rhs.find(o.token);
        if (pos == std::string_view::npos)
            continue;
        a.lhs = std::string(lhs_rhs.substr(0, pos));
        a.rhs = std::string(lhs_rhs.substr(pos + o.token.size()));
        a.op = o.op;
        found = true;
        break;
    }
    if (!found || a.lhs.empty() || a.rhs.empty())
        throw std::invalid_argument(fmt::format("assertion '{}' needs lhs OP rhs", text));

    if (a.op == CompareOp::close)
    {
        const auto colon = metric.find(':');
        if (colon == std::string_view::npos)
            throw std::invalid_argument(fmt::format("assertion '{}' needs ':tolerance'", text));
        a.tolerance = std::stod(std::string(metric.substr(colon + 1)));
        metric = metric.substr(0, colon);
    }
    if (metric == "pmd")
        a.metric = CompareMetric::p_md;
    else if (metric == "pfa")
        a.metric = CompareMetric::p_fa;
    else if (metric.size() > 1 && metric.front() == 'q')
    {
        a.metric = CompareMetric::quantile;
        a.level = std::stod(std::string(metric.substr(1)));
        if (!(a.level > 0.0 && a.level < 1.0))
            throw std::invalid_argument(fmt::format("assertion '{}' has a level outside (0, 1)", text));
    }
    else
        throw std::invalid_argument(fmt::format("assertion '{}' has an unknown metric", text));
    return a;
}

double metric_value(const RunResult &result, CompareMetric metric, double level)
{
    switch (metric)
    {
    case CompareMetric::p_md:
        return result.p_md();
    case CompareMetric::p_fa:
        return result.p_fa();
    case CompareMetric::quantile:
        return sorted_quantile(result.throughput, level).value;
    }
    return 0.0;
}

bool ComparisonReport::passed() const
{
    return std::all_of(outcomes.begin(), outcomes.end(), [](const AssertionOutcome &o) { return o.passed; });
}

ComparisonReport compare_scenarios(std::span<const NamedResult> results, std::span<const Assertion> assertions)
{
    ComparisonReport report;
    if (results.empty())
        return report;
    const auto &grid = results.front().result.scenario.quantile_levels;
    for (const auto &r : results)
        if (r.result.scenario.quantile_levels != grid)
            throw std::invalid_argument(fmt::format("result '{}' uses a different quantile grid", r.name));

    const auto &base = results.front().result;
    for (const auto &r : results)
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            QuantileDelta d;
            d.name = r.name;
            d.level = grid[i];
            d.value = r.result.quantiles.at(i).value;
            d.delta = d.value - base.quantiles.at(i).value;
            report.deltas.push_back(d);
        }

    auto lookup = [&](const std::string &name) -> const RunResult & {
        for (const auto &r : results)
            if (r.name == name)
                return r.result;
        throw std::invalid_argument(fmt::format("assertion names unknown result '{}'", name));
    };
    for (const auto &a : assertions)
    {
        AssertionOutcome o;
        o.assertion = a;
        o.lhs_value = metric_value(lookup(a.lhs), a.metric, a.level);
        o.rhs_value = metric_value(lookup(a.rhs), a.metric, a.level);
        switch (a.op)
        {
        case CompareOp::greater_equal:
            o.passed = o.lhs_value >= o.rhs_value;
            break;
        case CompareOp::greater:
            o.passed = o.lhs_value > o.rhs_value;
            break;
        case CompareOp::less_equal:
            o.passed = o.lhs_value <= o.rhs_value;
            break;
        case CompareOp::less:
            o.passed = o.lhs_value < o.rhs_value;
            break;
        case CompareOp::close:
            o.passed = std::abs(o.lhs_value - o.rhs_value) <= a.tolerance * std::abs(o.rhs_value);
            break;
        }
        report.outcomes.push_back(o);
    }
    return report;
}

} // namespace urllc
