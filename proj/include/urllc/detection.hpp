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

#include "urllc/pilots.hpp"
#include "urllc/rng.hpp"
#include "urllc/scenario.hpp"
#include "urllc/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace urllc
{

struct DetectionResult
{
    UeSet detected;     // B = {k : statistic_k > threshold}
    RVector statistic;  // T(z_k) for NP, gamma_k for covariance methods
    double threshold = 0.0;
    int iterations = 0; // sweeps run by covariance methods
};

// Everything a detector needs from one trial.
struct DetectionProblem
{
    CMatrix received; // tau x (M * N), column n * M + m holds y_m^n
    const PilotBook *pilots = nullptr;
    int antennas = 0;
    int subbands = 1;
    // PRB-ML only: per-UE 6 x 6 pilot-subcarrier covariance (any positive scale).
    std::vector<CMatrix> subcarrier_covariance;
};

DetectionResult apply_threshold(RVector statistic, double threshold);

// z = Phi^H Y, row k holds z_k stacked antenna-fastest. Throws
// std::invalid_argument for non-orthogonal pilots.
CMatrix np_correlate(const CMatrix &received, const PilotBook &book);
CVector np_correlate(const CMatrix &received, const PilotBook &book, int k);

// T(z_k) = sum of |z|^2 over row k.
RVector np_statistic(const CMatrix &z);

// gamma' = Q^{-1}_{chi2(2MN)}(p_fa) * null_variance / 2.
double np_threshold(double p_fa, int antennas, int subbands, double null_variance = 1.0);

DetectionResult np_detect(const CMatrix &z, double p_fa, int antennas, int subbands);

// Sample covariance Y Y^H / (number of columns).
CMatrix sample_covariance(const CMatrix &received);

enum class CoordinateVariant
{
    ml,
    mmv,
    nnls,
};

struct DescentOptions
{
    int max_sweeps = 50;
    double tolerance = 1e-6;
};

// Coordinate descent on Sigma = I + sum_k gamma_k B_k B_k^H. Rank-one factors
// (single columns) support all three variants; higher-rank factors support
// the ML variant only, via an exact one-dimensional minimization.
class CovarianceDescent
{
public:
    // Rank-one factors: column k of `signatures` is B_k.
    CovarianceDescent(CMatrix sample_cov, const CMatrix &signatures);
    CovarianceDescent(CMatrix sample_cov, std::vector<CMatrix> factors);

    // One coordinate step on UE k; returns the applied d (after the clamp).
    double step(int k, CoordinateVariant variant);

    // Random-permutation sweeps until max |d| < tolerance; returns sweeps run.
    int run(CoordinateVariant variant, const DescentOptions &options, Rng &rng);

    const CMatrix &sigma() const { return sigma_; }
    const CMatrix &sigma_inverse() const { return sigma_inv_; }
    const RVector &gamma() const { return gamma_; }
    const CMatrix &factor(int k) const { return factors_[static_cast<std::size_t>(k)]; }
    int ues() const { return static_cast<int>(factors_.size()); }

    // Negative log-likelihood log det Sigma + tr(Sigma^{-1} sample_cov).
    double objective() const;

    // Re-inverts Sigma from scratch, discarding accumulated update error.
    void refresh_inverse();

private:
    double rank_one_step(int k, CoordinateVariant variant) const;
    double ml_step(int k, CMatrix &sw, RVector &mu) const;
    void init();

    CMatrix sample_cov_;
    std::vector<CMatrix> factors_;
    CMatrix sigma_;
    CMatrix sigma_inv_;
    RVector gamma_;
};

// B_k = D_k C^{1/2} with D_k = [masked slices of phi_k] and C the UE's
// pilot-subcarrier covariance normalized by its mean diagonal, so that
// B_k B_k^H = sum_{s,s'} c^{s,s'} phi_k^s phi_k^{s'H} / beta_k. Throws
// std::invalid_argument for a covariance that is not PSD.
CMatrix prb_signature(const PilotBook &book, int k, const CMatrix &covariance);

// Activity statistics gamma for one problem. NP returns T(z_k).
RVector detection_statistic(DetectorId detector, const DetectionProblem &problem, const DescentOptions &options,
                            Rng &rng, int *iterations = nullptr);

// Runs `detector` and thresholds. `perfect` returns the true active set.
DetectionResult detect(DetectorId detector, const DetectionProblem &problem, double threshold,
                       const DescentOptions &options, Rng &rng, const UeSet &truth);

// Empirical (1 - p_fa) quantile of null statistics. Throws
// std::invalid_argument on an empty or all-equal sample.
double empirical_threshold(std::vector<double> null_statistics, double p_fa);

// Text cache of calibrated thresholds keyed by (detector, scenario hash, P_FA).
class ThresholdCache
{
public:
    explicit ThresholdCache(std::string path) : path_(std::move(path)) {}

    std::optional<double> lookup(DetectorId detector, std::uint64_t scenario_hash, double p_fa) const;
    void store(DetectorId detector, std::uint64_t scenario_hash, double p_fa, double threshold) const;

private:
    std::string path_;
};

} // namespace urllc
