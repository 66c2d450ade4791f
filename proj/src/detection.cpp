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

#include "urllc/detection.hpp"
#include "urllc/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace urllc
{

DetectionResult apply_threshold(RVector statistic, double threshold)
{
    DetectionResult r;
    r.threshold = threshold;
    for (Eigen::Index k = 0; k < statistic.size(); ++k)
        if (statistic(k) > threshold)
            r.detected.push_back(static_cast<int>(k));
    r.statistic = std::move(statistic);
    return r;
}

CMatrix np_correlate(const CMatrix &received, const PilotBook &book)
{
    if (!book.orthogonal())
        throw std::invalid_argument("NP correlation needs orthogonal pilots");
    if (received.rows() != book.length())
        throw std::invalid_argument("received block does not match the pilot length");
    return book.phi.adjoint() * received;
}

CVector np_correlate(const CMatrix &received, const PilotBook &book, int k)
{
    if (!book.orthogonal())
        throw std::invalid_argument("NP correlation needs orthogonal pilots");
    if (received.rows() != book.length())
        throw std::invalid_argument("received block does not match the pilot length");
    return (book.phi.col(k).adjoint() * received).transpose();
}

RVector np_statistic(const CMatrix &z)
{
    return z.rowwise().squaredNorm();
}

double np_threshold(double p_fa, int antennas, int subbands, double null_variance)
{
    if (!(p_fa > 0.0 && p_fa < 1.0))
        throw std::invalid_argument("P_FA must lie in (0, 1)");
    if (antennas < 1 || subbands < 1)
        throw std::invalid_argument("NP threshold needs M, N >= 1");
    const boost::math::chi_squared chi2(2.0 * antennas * subbands);
    return boost::math::quantile(boost::math::complement(chi2, p_fa)) * null_variance / 2.0;
}

DetectionResult np_detect(const CMatrix &z, double p_fa, int antennas, int subbands)
{
    return apply_threshold(np_statistic(z), np_threshold(p_fa, antennas, subbands));
}

CMatrix sample_covariance(const CMatrix &received)
{
    if (received.cols() == 0)
        throw std::invalid_argument("sample covariance of an empty block");
    CMatrix lower = CMatrix::Zero(received.rows(), received.rows());
    lower.selfadjointView<Eigen::Lower>().rankUpdate(received, 1.0 / static_cast<double>(received.cols()));
    return lower.selfadjointView<Eigen::Lower>();
}

CovarianceDescent::CovarianceDescent(CMatrix sample_cov, const CMatrix &signatures) : sample_cov_(std::move(sample_cov))
{
    factors_.reserve(static_cast<std::size_t>(signatures.cols()));
    for (Eigen::Index k = 0; k < signatures.cols(); ++k)
        factors_.emplace_back(signatures.col(k));
    init();
}

CovarianceDescent::CovarianceDescent(CMatrix sample_cov, std::vector<CMatrix> factors)
    : sample_cov_(std::move(sample_cov)), factors_(std::move(factors))
{
    init();
}

void CovarianceDescent::init()
{
    const auto tau = sample_cov_.rows();
    if (sample_cov_.cols() != tau)
        throw std::invalid_argument("sample covariance must be square");
    for (const auto &b : factors_)
        if (b.rows() != tau || b.cols() < 1)
            throw std::invalid_argument("signature does not match the pilot length");
    sigma_ = CMatrix::Identity(tau, tau);
    sigma_inv_ = CMatrix::Identity(tau, tau);
    gamma_ = RVector::Zero(static_cast<Eigen::Index>(factors_.size()));
}

double CovarianceDescent::rank_one_step(int k, CoordinateVariant variant) const
{
    const CVector b = factors_[static_cast<std::size_t>(k)].col(0);
    const CVector s = sigma_inv_ * b;
    const double q = b.dot(s).real();
    if (!(q > 0.0))
        return 0.0;
    double d = 0.0;
    switch (variant)
    {
    case CoordinateVariant::ml:
    {
        const double p = s.dot(sample_cov_ * s).real();
        d = (p - q) / (q * q);
        break;
    }
    case CoordinateVariant::mmv:
    {
        const double p = s.dot(sample_cov_ * s).real();
        d = (std::sqrt(std::max(p, 0.0)) - 1.0) / q;
        break;
    }
    case CoordinateVariant::nnls:
    {
        const double n2 = b.squaredNorm();
        d = b.dot((sample_cov_ - sigma_) * b).real() / (n2 * n2);
        break;
    }
    }
    return std::max(d, -gamma_(k));
}

// Exact minimizer over d >= -gamma_k of
//   f(d) = sum_i log(1 + d mu_i) - d p_i / (1 + d mu_i),
// the change of the ML objective under Sigma += d B B^H, where mu are the
// eigenvalues of Q = B^H Sigma^{-1} B and p the matching diagonal of
// W^H S^H Sigma_hat S W. Each term is quasi-convex with its minimum at
// (p_i - mu_i) / mu_i^2, so the global minimum lies between the smallest and
// largest of those points.
double CovarianceDescent::ml_step(int k, CMatrix &sw, RVector &mu) const
{
    const CMatrix &b = factors_[static_cast<std::size_t>(k)];
    const CMatrix s = sigma_inv_ * b;
    CMatrix q = b.adjoint() * s;
    q = (q + q.adjoint()).eval() / 2.0;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(q);
    mu = eig.eigenvalues();
    sw = s * eig.eigenvectors();
    const RVector p = (sw.adjoint() * sample_cov_ * sw).diagonal().real();

    const double mu_max = mu.maxCoeff();
    if (!(mu_max > 0.0))
        return 0.0;
    std::vector<double> m, pp;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (mu(i) > 1e-12 * mu_max)
        {
            m.push_back(mu(i));
            pp.push_back(p(i));
        }

    auto f = [&](double d) {
        double v = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
        {
            const double x = 1.0 + d * m[i];
            v += std::log(x) - d * pp[i] / x;
        }
        return v;
    };
    auto df = [&](double d) {
        double v = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
        {
            const double x = 1.0 + d * m[i];
            v += (m[i] * x - pp[i]) / (x * x);
        }
        return v;
    };

    const double lo = std::max(-gamma_(k), (-1.0 + 1e-12) / mu_max);
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (std::size_t i = 0; i < m.size(); ++i)
    {
        const double di = (pp[i] - m[i]) / (m[i] * m[i]);
        dmin = std::min(dmin, di);
        dmax = std::max(dmax, di);
    }
    if (dmax <= lo)
        return lo;
    const double a = std::max(lo, dmin);
    if (dmax - a <= 1e-15 * std::max(1.0, std::abs(dmax)))
        return a;

    // Local minima sit where f' changes sign from - to +; bracket them on a
    // grid and bisect. f'(dmax) >= 0 always holds.
    std::vector<double> candidates{a};
    constexpr int grid = 16;
    double left = a;
    double left_slope = df(a);
    for (int j = 1; j <= grid; ++j)
    {
        const double right = j == grid ? dmax : a + (dmax - a) * j / grid;
        const double right_slope = df(right);
        if (left_slope < 0.0 && right_slope >= 0.0)
        {
            double x0 = left;
            double x1 = right;
            for (int it = 0; it < 60 && x1 - x0 > 1e-14 * std::max(1.0, std::abs(x1)); ++it)
            {
                const double mid = 0.5 * (x0 + x1);
                (df(mid) < 0.0 ? x0 : x1) = mid;
            }
            candidates.push_back(0.5 * (x0 + x1));
        }
        left = right;
        left_slope = right_slope;
    }
    if (lo <= 0.0)
        candidates.push_back(0.0);

    double best = candidates.front();
    double best_f = f(best);
    for (std::size_t i = 1; i < candidates.size(); ++i)
    {
        const double v = f(candidates[i]);
        if (v < best_f)
        {
            best = candidates[i];
            best_f = v;
        }
    }
    return best;
}

double CovarianceDescent::step(int k, CoordinateVariant variant)
{
    if (k < 0 || k >= ues())
        throw std::out_of_range("coordinate outside the UE range");
    const CMatrix &b = factors_[static_cast<std::size_t>(k)];
    double d = 0.0;
    if (b.cols() == 1)
    {
        d = rank_one_step(k, variant);
        if (d == 0.0)
            return 0.0;
        const CVector s = sigma_inv_ * b.col(0);
        const double q = b.col(0).dot(s).real();
        sigma_inv_.noalias() -= (d / (1.0 + d * q)) * s * s.adjoint();
    }
    else
    {
        if (variant != CoordinateVariant::ml)
            throw std::invalid_argument("multi-column signatures support the ML variant only");
        CMatrix sw;
        RVector mu;
        d = ml_step(k, sw, mu);
        if (d == 0.0)
            return 0.0;
        RVector w(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            w(i) = d / (1.0 + d * mu(i));
        sigma_inv_.noalias() -= sw * w.asDiagonal() * sw.adjoint();
    }
    sigma_.noalias() += d * b * b.adjoint();
    gamma_(k) = std::max(gamma_(k) + d, 0.0);
    return d;
}

void CovarianceDescent::refresh_inverse()
{
    sigma_ = (sigma_ + sigma_.adjoint()).eval() / 2.0;
    Eigen::LLT<CMatrix> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("covariance estimate lost positive definiteness");
    sigma_inv_ = llt.solve(CMatrix::Identity(sigma_.rows(), sigma_.cols()));
}

int CovarianceDescent::run(CoordinateVariant variant, const DescentOptions &options, Rng &rng)
{
    std::vector<int> order(static_cast<std::size_t>(ues()));
    std::iota(order.begin(), order.end(), 0);
    int sweeps = 0;
    while (sweeps < options.max_sweeps)
    {
        std::shuffle(order.begin(), order.end(), rng);
        double largest = 0.0;
        for (int k : order)
            largest = std::max(largest, std::abs(step(k, variant)));
        refresh_inverse();
        ++sweeps;
        if (largest < options.tolerance)
            break;
    }
    return sweeps;
}

double CovarianceDescent::objective() const
{
    Eigen::LLT<CMatrix> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("covariance estimate is not positive definite");
    const CMatrix l = llt.matrixL();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        logdet += 2.0 * std::log(l(i, i).real());
    return logdet + llt.solve(sample_cov_).trace().real();
}

CMatrix prb_signature(const PilotBook &book, int k, const CMatrix &covariance)
{
    if (covariance.rows() != prb_pilot_blocks || covariance.cols() != prb_pilot_blocks)
        throw std::invalid_argument("PRB covariance must be 6 x 6");
    const double scale = covariance.diagonal().real().mean();
    if (scale == 0.0 && covariance.norm() == 0.0)
        return CMatrix::Zero(prb_pilot_length, 1);
    if (!(scale > 0.0))
        throw std::invalid_argument("PRB covariance is not positive semidefinite");

    const CMatrix c = (covariance + covariance.adjoint()) / (2.0 * scale);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(c);
    const RVector &lambda = eig.eigenvalues();
    const double top = lambda.maxCoeff();
    if (lambda.minCoeff() < -1e-9 * top)
        throw std::invalid_argument("PRB covariance is not positive semidefinite");

    CMatrix d(prb_pilot_length, prb_pilot_blocks);
    for (int s = 0; s < prb_pilot_blocks; ++s)
        d.col(s) = masked_pilot(book, k, s);

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (lambda(i) > 1e-12 * top)
            keep.push_back(i);
    CMatrix root(prb_pilot_blocks, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
        root.col(static_cast<Eigen::Index>(j)) = std::sqrt(lambda(keep[j])) * eig.eigenvectors().col(keep[j]);
    return d * root;
}

RVector detection_statistic(DetectorId detector, const DetectionProblem &problem, const DescentOptions &options,
                            Rng &rng, int *iterations)
{
    if (problem.pilots == nullptr)
        throw std::invalid_argument("detection problem without a pilot book");
    const PilotBook &book = *problem.pilots;
    int sweeps = 0;
    RVector stat;
    switch (detector)
    {
    case DetectorId::np:
    {
        if (!book.orthogonal())
            throw std::invalid_argument("NP detection needs orthogonal pilots");
        // T(z_k) = phi_k^H (Y Y^H) phi_k, cheaper than forming every z_k
        const CMatrix r = sample_covariance(problem.received) * static_cast<double>(problem.received.cols());
        stat = (book.phi.adjoint() * r * book.phi).diagonal().real();
        break;
    }
    case DetectorId::ml:
    case DetectorId::mmv:
    case DetectorId::nnls:
    {
        const auto variant = detector == DetectorId::ml    ? CoordinateVariant::ml
                             : detector == DetectorId::mmv ? CoordinateVariant::mmv
                                                           : CoordinateVariant::nnls;
        CovarianceDescent cd(sample_covariance(problem.received), book.phi);
        sweeps = cd.run(variant, options, rng);
        stat = cd.gamma();
        break;
    }
    case DetectorId::prb_ml:
    {
        if (static_cast<int>(problem.subcarrier_covariance.size()) != book.ues())
            throw std::invalid_argument("PRB-ML needs one subcarrier covariance per UE");
        std::vector<CMatrix> factors;
        factors.reserve(problem.subcarrier_covariance.size());
        for (int k = 0; k < book.ues(); ++k)
            factors.push_back(prb_signature(book, k, problem.subcarrier_covariance[static_cast<std::size_t>(k)]));
        CovarianceDescent cd(sample_covariance(problem.received), std::move(factors));
        sweeps = cd.run(CoordinateVariant::ml, options, rng);
        stat = cd.gamma();
        break;
    }
    case DetectorId::perfect:
        throw std::invalid_argument("perfect detection has no statistic");
    }
    if (iterations != nullptr)
        *iterations = sweeps;
    return stat;
}

DetectionResult detect(DetectorId detector, const DetectionProblem &problem, double threshold,
                       const DescentOptions &options, Rng &rng, const UeSet &truth)
{
    if (detector == DetectorId::perfect)
    {
        const int ues = problem.pilots != nullptr ? problem.pilots->ues() : 0;
        RVector indicator = RVector::Zero(ues);
        for (int k : truth)
            indicator(k) = 1.0;
        return apply_threshold(std::move(indicator), 0.5);
    }
    int sweeps = 0;
    DetectionResult r = apply_threshold(detection_statistic(detector, problem, options, rng, &sweeps), threshold);
    r.iterations = sweeps;
    return r;
}

double empirical_threshold(std::vector<double> null_statistics, double p_fa)
{
    if (!(p_fa > 0.0 && p_fa < 1.0))
        throw std::invalid_argument("P_FA must lie in (0, 1)");
    if (null_statistics.empty())
        throw std::invalid_argument("no null statistics to calibrate from");
    std::sort(null_statistics.begin(), null_statistics.end());
    if (null_statistics.front() == null_statistics.back())
        throw std::invalid_argument("degenerate null sample: all statistics are equal");
    return sorted_quantile(null_statistics, 1.0 - p_fa).value;
}

std::optional<double> ThresholdCache::lookup(DetectorId detector, std::uint64_t scenario_hash, double p_fa) const
{
    std::ifstream in(path_);
    if (!in)
        return std::nullopt;
    const std::string id(to_string(detector));
    const std::string hash = fmt::format("{:016x}", scenario_hash);
    std::optional<double> found;
    std::string line;
    while (std::getline(in, line))
    {
        std::istringstream row(line);
        std::string d, h;
        double p = 0.0, t = 0.0;
        if (!(row >> d >> h >> p >> t))
            continue;
        if (d == id && h == hash && p == p_fa)
            found = t; // later entries win
    }
    return found;
}

void ThresholdCache::store(DetectorId detector, std::uint64_t scenario_hash, double p_fa, double threshold) const
{
    std::ofstream out(path_, std::ios::app);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write threshold cache {}", path_));
    out << fmt::format("{} {:016x} {:.17g} {:.17g}\n", to_string(detector), scenario_hash, p_fa, threshold);
}

} // namespace urllc
