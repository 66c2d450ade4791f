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

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "urllc/detection.hpp"

#include <cstdio>
#include <filesystem>

using namespace urllc;

namespace
{

// Received pilots tau x cols for UEs `active` with unit-power Rayleigh
// channels scaled by sqrt(gain), plus unit noise when `noise` is set.
CMatrix received(const CMatrix &signatures, const std::vector<int> &active, double gain, int cols, Rng &rng,
                 bool noise = true)
{
    CMatrix y = noise ? testutil::random_matrix(signatures.rows(), cols, rng) : CMatrix::Zero(signatures.rows(), cols);
    for (int k : active)
        y += std::sqrt(gain) * signatures.col(k) * testutil::random_matrix(1, cols, rng);
    return y;
}

CMatrix unit_columns(int tau, int ues, Rng &rng)
{
    CMatrix s = testutil::random_matrix(tau, ues, rng);
    s.colwise().normalize();
    return s;
}

} // namespace

TEST_CASE("thresholding is strict")
{
    RVector t(4);
    t << 0.5, 1.0, 1.5, 0.0;
    const auto r = apply_threshold(t, 1.0);
    CHECK(r.detected == UeSet{2});
    CHECK(r.threshold == 1.0);
}

TEST_CASE("NP correlator outputs")
{
    const auto book = make_orthogonal_pilots(6, 8);
    Rng rng(1);
    const int m = 3;
    const int n = 2;
    const double tau_rho = 8.0 * 5.0;
    CMatrix g = testutil::random_matrix(1, m * n, rng);
    const CMatrix y = std::sqrt(tau_rho) * book.phi.col(2) * g;

    const CMatrix z = np_correlate(y, book);
    REQUIRE(z.rows() == 6);
    REQUIRE(z.cols() == m * n);
    for (int k = 0; k < 6; ++k)
    {
        if (k == 2)
            CHECK((z.row(k) - std::sqrt(tau_rho) * g).norm() < 1e-12);
        else
            CHECK(z.row(k).norm() < 1e-12);
    }
    CHECK((np_correlate(y, book, 2) - z.row(2).transpose()).norm() < 1e-12);
    CHECK(np_statistic(z)(2) == doctest::Approx(z.row(2).squaredNorm()));
    CHECK_THROWS_AS(np_correlate(y, make_gold_pilots(6, 8)), std::invalid_argument);
}

TEST_CASE("NP correlator variance under activity")
{
    const auto book = make_orthogonal_pilots(4, 4);
    Rng rng(2);
    const double tau_rho_beta = 4.0 * 2.5;
    const CMatrix y = received(book.phi, {1}, tau_rho_beta, 100000, rng);
    const CVector z = np_correlate(y, book, 1);
    CHECK(z.squaredNorm() / 100000.0 == doctest::Approx(tau_rho_beta + 1.0).epsilon(0.03));
}

TEST_CASE("NP closed-form threshold")
{
    // chi-square inverse survival, halved; frozen reference values
    CHECK(np_threshold(0.05, 1, 1) == doctest::Approx(2.9957322735539913).epsilon(1e-12));
    CHECK(np_threshold(0.05, 1, 1) == doctest::Approx(-std::log(0.05)).epsilon(1e-12));
    CHECK(np_threshold(0.01, 128, 16) == doctest::Approx(2154.7467852449977).epsilon(1e-12));
    CHECK(np_threshold(1e-3, 4, 3) == doctest::Approx(25.589298888688695).epsilon(1e-12));
    CHECK(np_threshold(0.05, 1, 1, 2.0) == doctest::Approx(2.0 * 2.9957322735539913).epsilon(1e-12));
    CHECK_THROWS_AS(np_threshold(0.0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(np_threshold(1.0, 1, 1), std::invalid_argument);
}

TEST_CASE("NP detector on silent input")
{
    const CMatrix z = CMatrix::Zero(5, 8);
    const auto r = np_detect(z, 0.01, 4, 2);
    CHECK(r.detected.empty());
}

TEST_CASE("NP null statistic follows chi-square with 2MN degrees of freedom")
{
    const int m = 4;
    const int n = 2;
    const auto book = make_orthogonal_pilots(50, 50);
    Rng rng(3);
    const double threshold = np_threshold(0.01, m, n);
    long alarms = 0;
    long total = 0;
    double sum = 0.0;
    for (int trial = 0; trial < 10000; ++trial)
    {
        const CMatrix y = testutil::random_matrix(50, m * n, rng);
        const RVector t = np_statistic(np_correlate(y, book));
        for (Eigen::Index k = 0; k < t.size(); ++k)
        {
            sum += t(k);
            alarms += t(k) > threshold;
            ++total;
        }
    }
    const double rate = static_cast<double>(alarms) / static_cast<double>(total);
    CHECK(rate >= 0.008);
    CHECK(rate <= 0.012);
    CHECK(sum / static_cast<double>(total) == doctest::Approx(m * n).epsilon(0.01));
}

TEST_CASE("NP statistic through the detector dispatch")
{
    const auto book = make_orthogonal_pilots(8, 8);
    Rng rng(4);
    DetectionProblem p;
    p.received = testutil::random_matrix(8, 6, rng);
    p.pilots = &book;
    p.antennas = 3;
    p.subbands = 2;
    const RVector direct = np_statistic(np_correlate(p.received, book));
    const RVector via = detection_statistic(DetectorId::np, p, {}, rng);
    CHECK((direct - via).norm() < 1e-9 * direct.norm());
}

TEST_CASE("coordinate steps: hand-evaluated example")
{
    CMatrix phi = CMatrix::Zero(2, 1);
    phi(0, 0) = 1.0;
    CMatrix cov = CMatrix::Zero(2, 2);
    cov(0, 0) = 3.0;
    cov(1, 1) = 1.0;
    {
        CovarianceDescent cd(cov, phi);
        CHECK(cd.step(0, CoordinateVariant::ml) == doctest::Approx(2.0));
        CHECK(cd.gamma()(0) == doctest::Approx(2.0));
    }
    {
        CovarianceDescent cd(cov, phi);
        CHECK(cd.step(0, CoordinateVariant::nnls) == doctest::Approx(2.0));
    }
    {
        CovarianceDescent cd(cov, phi);
        CHECK(cd.step(0, CoordinateVariant::mmv) == doctest::Approx(std::sqrt(3.0) - 1.0));
        CHECK(cd.gamma()(0) == doctest::Approx(0.7320508075688772));
    }
}

TEST_CASE("noise-only statistics are a fixed point")
{
    Rng rng(5);
    const CMatrix phi = unit_columns(6, 10, rng);
    for (auto v : {CoordinateVariant::ml, CoordinateVariant::mmv, CoordinateVariant::nnls})
    {
        CovarianceDescent cd(CMatrix::Identity(6, 6), phi);
        for (int k = 0; k < 10; ++k)
            CHECK(cd.step(k, v) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(cd.gamma().norm() < 1e-14);
        CHECK((cd.sigma() - CMatrix::Identity(6, 6)).norm() < 1e-14);
    }
}

TEST_CASE("negative steps are clamped at -gamma")
{
    // b1 overlaps a direction where the sample covariance is deficient, so
    // once gamma_1 > 0 and b0 has fitted e1 the raw step on b1 undershoots.
    CMatrix phi = CMatrix::Zero(2, 2);
    phi(0, 0) = 1.0;
    phi(0, 1) = 1.0 / std::sqrt(2.0);
    phi(1, 1) = 1.0 / std::sqrt(2.0);
    CMatrix cov = CMatrix::Zero(2, 2);
    cov(0, 0) = 5.0;
    cov(1, 1) = 0.2;
    for (auto v : {CoordinateVariant::ml, CoordinateVariant::mmv, CoordinateVariant::nnls})
    {
        CovarianceDescent cd(cov, phi);
        cd.step(1, CoordinateVariant::nnls);
        cd.step(0, CoordinateVariant::ml);
        cd.step(0, CoordinateVariant::nnls);
        const double g1 = cd.gamma()(1);
        REQUIRE(g1 > 0.0);

        const CVector b = phi.col(1);
        const CVector w = cd.sigma_inverse() * b;
        const double q = b.dot(w).real();
        const double pq = w.dot(cov * w).real();
        const CMatrix resid = cov - cd.sigma();
        const double raw = v == CoordinateVariant::ml    ? (pq - q) / (q * q)
                           : v == CoordinateVariant::mmv ? (std::sqrt(pq) - 1.0) / q
                                                         : b.dot(resid * b).real() / std::pow(b.squaredNorm(), 2);
        REQUIRE(raw < -g1);
        CHECK(cd.step(1, v) == doctest::Approx(-g1));
        CHECK(cd.gamma()(1) == 0.0);
    }
}

TEST_CASE("a deficient direction keeps gamma at zero")
{
    CMatrix phi = CMatrix::Zero(2, 1);
    phi(0, 0) = 1.0;
    CMatrix cov = CMatrix::Identity(2, 2);
    cov(0, 0) = 0.1;
    for (auto v : {CoordinateVariant::ml, CoordinateVariant::mmv, CoordinateVariant::nnls})
    {
        CovarianceDescent cd(cov, phi);
        CHECK(cd.step(0, v) == 0.0);
        CHECK(cd.gamma()(0) == 0.0);
    }
}

TEST_CASE("descent invariants over random update sequences")
{
    Rng rng(6);
    for (auto v : {CoordinateVariant::ml, CoordinateVariant::mmv, CoordinateVariant::nnls})
    {
        const auto audit = oracles::audit_descent(v, 1000, rng);
        CHECK(audit.min_gamma >= 0.0);
        CHECK(audit.sigma_error < 1e-9);
        CHECK(audit.inverse_error < 1e-9);
        if (v == CoordinateVariant::ml)
            CHECK(audit.max_increase <= 1e-8);
    }
}

TEST_CASE("exact ML step on multi-column factors never increases the objective")
{
    Rng rng(7);
    const int tau = 12;
    std::vector<CMatrix> factors;
    for (int k = 0; k < 6; ++k)
        factors.push_back(testutil::random_matrix(tau, 1 + k % 3, rng, 0.2));
    CMatrix y = testutil::random_matrix(tau, 40, rng);
    y += factors[2] * testutil::random_matrix(factors[2].cols(), 40, rng, 10.0);
    CovarianceDescent cd(sample_covariance(y), factors);
    std::uniform_int_distribution<int> pick(0, 5);
    double last = cd.objective();
    for (int it = 0; it < 1000; ++it)
    {
        cd.step(pick(rng), CoordinateVariant::ml);
        CHECK(cd.gamma().minCoeff() >= 0.0);
        const double now = cd.objective();
        CHECK(now <= last + 1e-8);
        last = now;
    }
    CMatrix model = CMatrix::Identity(tau, tau);
    for (int k = 0; k < 6; ++k)
        model += cd.gamma()(k) * factors[static_cast<std::size_t>(k)] * factors[static_cast<std::size_t>(k)].adjoint();
    CHECK((cd.sigma() - model).norm() < 1e-9);
    CHECK_THROWS_AS(cd.step(1, CoordinateVariant::mmv), std::invalid_argument);
}

TEST_CASE("exact ML step is the one-dimensional minimizer")
{
    Rng rng(8);
    const int tau = 10;
    std::vector<CMatrix> factors{testutil::random_matrix(tau, 3, rng, 0.3), testutil::random_matrix(tau, 2, rng, 0.3)};
    const CMatrix y = testutil::random_matrix(tau, 30, rng) + factors[0] * testutil::random_matrix(3, 30, rng, 4.0);
    const CMatrix cov = sample_covariance(y);
    CovarianceDescent cd(cov, factors);
    const CMatrix sigma0 = cd.sigma();
    const double d = cd.step(0, CoordinateVariant::ml);
    auto objective = [&](double t) {
        const CMatrix s = sigma0 + t * factors[0] * factors[0].adjoint();
        Eigen::LLT<CMatrix> llt(s);
        double logdet = 0.0;
        for (int i = 0; i < tau; ++i)
            logdet += 2.0 * std::log(llt.matrixL()(i, i).real());
        return logdet + llt.solve(cov).trace().real();
    };
    const double best = objective(d);
    for (double t = 0.0; t < 10.0 * std::max(d, 1.0); t += 0.01)
        CHECK(objective(t) >= best - 1e-9);
}

TEST_CASE("descent run stops on tolerance")
{
    Rng rng(9);
    const CMatrix phi = unit_columns(8, 10, rng);
    const CMatrix y = received(phi, {0, 3}, 30.0, 200, rng);
    CovarianceDescent cd(sample_covariance(y), phi);
    const int sweeps = cd.run(CoordinateVariant::ml, {200, 1e-9}, rng);
    CHECK(sweeps < 200);
    for (int k = 0; k < 10; ++k)
        CHECK(std::abs(cd.step(k, CoordinateVariant::ml)) < 1e-6);
}

TEST_CASE("PRB signature of a flat covariance reduces to the full pilot")
{
    const auto book = make_gold_pilots(8, 24, 1, PilotMode::gold_prb);
    const CMatrix flat = CMatrix::Constant(6, 6, 2.5);
    for (int k = 0; k < 8; ++k)
    {
        const CMatrix b = prb_signature(book, k, flat);
        CHECK((b * b.adjoint() - book.phi.col(k) * book.phi.col(k).adjoint()).norm() < 1e-12);
    }
    CHECK(prb_signature(book, 0, CMatrix::Zero(6, 6)).norm() == 0.0);
    CMatrix bad = CMatrix::Identity(6, 6);
    bad(0, 0) = -3.0;
    CHECK_THROWS_AS(prb_signature(book, 0, bad), std::invalid_argument);
}

TEST_CASE("PRB signature carries the subcarrier covariance")
{
    const auto book = make_gold_pilots(2, 24, 1, PilotMode::gold_prb);
    Rng rng(10);
    const CMatrix c = testutil::random_hpd(6, rng);
    const double scale = c.diagonal().real().mean();
    const CMatrix b = prb_signature(book, 1, c);
    CMatrix expect = CMatrix::Zero(24, 24);
    for (int s = 0; s < 6; ++s)
        for (int t = 0; t < 6; ++t)
            expect += c(s, t) / scale * masked_pilot(book, 1, s) * masked_pilot(book, 1, t).adjoint();
    CHECK((b * b.adjoint() - expect).norm() < 1e-10);
}

TEST_CASE("PRB-ML with flat covariance matches rank-one ML")
{
    const auto book = make_gold_pilots(10, 24, 1, PilotMode::gold_prb);
    Rng rng(11);
    const CMatrix y = received(book.phi, {2, 5}, 15.0, 32, rng);
    std::vector<CMatrix> factors;
    for (int k = 0; k < 10; ++k)
        factors.push_back(prb_signature(book, k, CMatrix::Constant(6, 6, 1.0)));
    const CMatrix cov = sample_covariance(y);
    CovarianceDescent rank_one(cov, book.phi);
    CovarianceDescent general(cov, factors);
    Rng order(12);
    std::uniform_int_distribution<int> pick(0, 9);
    for (int it = 0; it < 300; ++it)
    {
        const int k = pick(order);
        const double a = rank_one.step(k, CoordinateVariant::ml);
        const double b = general.step(k, CoordinateVariant::ml);
        CHECK(a == doctest::Approx(b).epsilon(1e-7).scale(1.0));
    }
    CHECK((rank_one.gamma() - general.gamma()).norm() < 1e-6 * (1.0 + rank_one.gamma().norm()));
}

TEST_CASE("zero covariance leaves the PRB model untouched")
{
    const auto book = make_gold_pilots(4, 24, 1, PilotMode::gold_prb);
    Rng rng(13);
    std::vector<CMatrix> factors;
    for (int k = 0; k < 4; ++k)
        factors.push_back(prb_signature(book, k, CMatrix::Zero(6, 6)));
    const CMatrix y = received(book.phi, {0, 1}, 10.0, 16, rng);
    CovarianceDescent cd(sample_covariance(y), factors);
    cd.run(CoordinateVariant::ml, {}, rng);
    CHECK(cd.gamma().norm() == 0.0);
    CHECK((cd.sigma() - CMatrix::Identity(24, 24)).norm() == 0.0);
}

TEST_CASE("PRB-ML ranks a lone noise-free UE first")
{
    const auto book = make_gold_pilots(20, 24, 1, PilotMode::gold_prb);
    Rng rng(14);
    const CMatrix cov = testutil::random_hpd(6, rng, 0.5);
    const Eigen::LLT<CMatrix> root(cov);
    const double tau_rho = 24.0 * 1e4;
    int wins = 0;
    std::uniform_int_distribution<int> pick(0, 19);
    for (int trial = 0; trial < 100; ++trial)
    {
        const int k = pick(rng);
        const int m = 16;
        // per-antenna pilot-subcarrier coefficients with covariance `cov`
        const CMatrix h = root.matrixL() * testutil::random_matrix(6, m, rng);
        CMatrix y = CMatrix::Zero(24, m);
        for (int s = 0; s < 6; ++s)
            y += std::sqrt(tau_rho) * masked_pilot(book, k, s) * h.row(s);
        DetectionProblem p;
        p.received = y;
        p.pilots = &book;
        p.antennas = m;
        p.subcarrier_covariance.assign(20, cov);
        const RVector g = detection_statistic(DetectorId::prb_ml, p, {}, rng);
        Eigen::Index best = 0;
        g.maxCoeff(&best);
        wins += best == k;
    }
    CHECK(wins >= 99);
}

TEST_CASE("perfect detection returns the truth")
{
    const auto book = make_gold_pilots(6, 24);
    DetectionProblem p;
    p.pilots = &book;
    Rng rng(15);
    const auto r = detect(DetectorId::perfect, p, 0.0, {}, rng, {1, 4});
    CHECK(r.detected == UeSet{1, 4});
    CHECK_THROWS_AS(detection_statistic(DetectorId::perfect, p, {}, rng), std::invalid_argument);
}

TEST_CASE("empirical threshold")
{
    std::vector<double> s;
    for (int i = 0; i < 101; ++i)
        s.push_back(static_cast<double>(100 - i));
    CHECK(empirical_threshold(s, 0.5) == 50.0);
    CHECK(empirical_threshold(s, 0.01) == 99.0);
    CHECK_THROWS_AS(empirical_threshold({}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(empirical_threshold({2.0, 2.0, 2.0}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(empirical_threshold(s, 0.0), std::invalid_argument);
}

TEST_CASE("threshold cache")
{
    const auto path = std::filesystem::temp_directory_path() / "urllc_threshold_cache_test.txt";
    std::filesystem::remove(path);
    const ThresholdCache cache(path.string());
    CHECK_FALSE(cache.lookup(DetectorId::ml, 42, 1e-3).has_value());
    cache.store(DetectorId::ml, 42, 1e-3, 1.25);
    cache.store(DetectorId::mmv, 42, 1e-3, 9.0);
    cache.store(DetectorId::ml, 43, 1e-3, 7.0);
    CHECK(cache.lookup(DetectorId::ml, 42, 1e-3).value() == 1.25);
    CHECK(cache.lookup(DetectorId::mmv, 42, 1e-3).value() == 9.0);
    CHECK_FALSE(cache.lookup(DetectorId::ml, 42, 1e-2).has_value());
    cache.store(DetectorId::ml, 42, 1e-3, 0.1 + 0.2);
    CHECK(cache.lookup(DetectorId::ml, 42, 1e-3).value() == 0.1 + 0.2);
    std::filesystem::remove(path);
}
