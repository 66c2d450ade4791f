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

#include "urllc/channel.hpp"
#include "urllc/detection.hpp"
#include "urllc/link.hpp"
#include "urllc/pilots.hpp"
#include "urllc/scenario.hpp"
#include "urllc/stats.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace urllc
{

// One row of samples.csv: an active or falsely detected UE in one trial.
struct UeSample
{
    std::uint64_t trial = 0;
    int ue = 0;
    double beta = 0.0;
    double eta = 0.0;
    UeLabel label = UeLabel::true_inactive;
    double sinr = 0.0; // linear, aggregated over frequency units
    double throughput = 0.0;
};

struct TrialOutcome
{
    std::vector<UeSample> samples; // sorted by UE
    std::size_t active = 0;
    std::size_t misdetected = 0;
    std::size_t false_alarms = 0;
    std::size_t inactive = 0; // authorized UEs outside A
    int iterations = 0;
};

// Received pilots of one trial together with the ground truth.
struct TrialDraw
{
    AuthorizedUes ues;
    ActivityPattern activity;
    ChannelRealization channels; // K columns; zero for inactive UEs
    CMatrix received;            // tau x (M * N) CI stack or 24 x M PRB block
};

struct QuantileRow
{
    double level = 0.0;
    double value = 0.0;
    bool reliable = true;
};

struct RunResult
{
    Scenario scenario; // resolved
    std::vector<UeSample> samples;
    std::vector<double> throughput; // sorted, one per active UE per trial
    std::uint64_t trials = 0;
    std::uint64_t first_trial = 0;
    std::size_t active = 0;
    std::size_t misdetected = 0;
    std::size_t false_alarms = 0;
    std::size_t inactive = 0;
    std::vector<QuantileRow> quantiles;
    double threshold = 0.0;
    double small_scale_variance = 1.0;
    double wall_seconds = 0.0;
    std::uint64_t hash = 0;
    double mean_iterations = 0.0;

    double p_md() const;
    double p_fa() const;
};

// Per-trial engine. Holds every trial-invariant quantity of a scenario;
// const member functions are safe to call from several threads.
class Simulator
{
public:
    explicit Simulator(const Scenario &scenario);

    const Scenario &scenario() const { return scenario_; }
    const PilotBook &pilots() const { return pilots_; }
    double small_scale_variance() const { return variance_; }
    const CMatrix &unit_covariance() const { return unit_covariance_; }

    double threshold() const { return threshold_; }
    void set_threshold(double threshold) { threshold_ = threshold; }

    TrialDraw draw(std::uint64_t trial) const;
    DetectionProblem detection_problem(const TrialDraw &draw) const;
    TrialOutcome run_trial(std::uint64_t trial) const;

    // Detection statistics of the truly inactive UEs of one trial.
    std::vector<double> null_statistics(std::uint64_t trial) const;

private:
    Scenario scenario_;
    PilotBook pilots_;
    ChannelGenerator generator_;
    double variance_ = 1.0;
    CMatrix unit_covariance_; // 6 x 6 pilot-subcarrier covariance, PRB mode
    double threshold_ = 0.0;
};

struct RunOptions
{
    std::uint64_t trials = 1000;
    std::uint64_t first_trial = 0;
    int workers = 0; // 0 = hardware concurrency
};

// Runs fn(i) for i in [0, count) over worker threads; the first exception
// stops the pool and is rethrown.
void parallel_for(std::uint64_t count, int workers, const std::function<void(std::uint64_t)> &fn);

// Threshold for the scenario's detector: pinned value, closed form, cache or
// calibration, in that order. Returns 0 for perfect detection.
double resolve_threshold(const Scenario &scenario, int workers = 0);

// Empirical (1 - p_fa) quantile of null statistics gathered from `trials`
// trials on streams disjoint from run trials.
double calibrate_threshold(DetectorId detector, const Scenario &scenario, double p_fa, std::uint64_t trials,
                           int workers = 0);

// Raw null statistics behind calibrate_threshold.
std::vector<double> collect_null_statistics(const Scenario &scenario, std::uint64_t trials, int workers = 0);

RunResult run(const Scenario &scenario, const RunOptions &options);

// Combines two runs of the same scenario and seed over disjoint trial ranges.
RunResult merge_results(const RunResult &first, const RunResult &second);

// Rebuilds the sorted throughput list and the quantile table from the samples.
void summarize(RunResult &result);

struct NamedResult
{
    std::string name;
    RunResult result;
};

enum class CompareOp
{
    greater_equal,
    greater,
    less_equal,
    less,
    close,
};

enum class CompareMetric
{
    quantile,
    p_md,
    p_fa,
};

// "lhs>=rhs@q0.01", "lhs>rhs@pmd", "lhs~rhs@q0.01:0.1" (relative to rhs).
struct Assertion
{
    std::string lhs;
    std::string rhs;
    CompareOp op = CompareOp::greater_equal;
    CompareMetric metric = CompareMetric::quantile;
    double level = 0.0;
    double tolerance = 0.0;
    std::string text;
};

Assertion parse_assertion(std::string_view text);

struct AssertionOutcome
{
    Assertion assertion;
    double lhs_value = 0.0;
    double rhs_value = 0.0;
    bool passed = false;
};

struct QuantileDelta
{
    std::string name; // compared against the first result
    double level = 0.0;
    double value = 0.0;
    double delta = 0.0;
};

struct ComparisonReport
{
    std::vector<QuantileDelta> deltas;
    std::vector<AssertionOutcome> outcomes;

    bool passed() const;
};

// Throws std::invalid_argument when the results use different quantile grids
// or an assertion names an unknown result.
ComparisonReport compare_scenarios(std::span<const NamedResult> results, std::span<const Assertion> assertions);

double metric_value(const RunResult &result, CompareMetric metric, double level);

} // namespace urllc
