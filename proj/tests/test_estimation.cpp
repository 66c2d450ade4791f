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
#include "urllc/estimation.hpp"

#include <algorithm>

using namespace urllc;
using namespace oracles;

TEST_CASE("joint diagonal-prior estimator matches the conditional-mean oracle")
{
    Rng rng(1);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep)
    {
        const auto in = ci_instance(rng, rep % 2 == 0);
        const auto e = estimate_channels(EstimatorId::ci_diag, input_of(in));
        worst = std::max(worst, max_abs_error(e, ci_oracle(in), in.detected, in.antennas));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("per-UE estimator matches the conditional-mean oracle")
{
    Rng rng(2);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep)
    {
        const auto in = ci_instance(rng, true);
        const auto e = estimate_channels(EstimatorId::ci_per_ue, input_of(in));
        worst = std::max(worst, max_abs_error(e, ci_oracle(in), in.detected, in.antennas));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("PRB estimator matches the conditional-mean oracle")
{
    Rng rng(3);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep)
    {
        const auto in = prb_instance(rng, rep % 4 == 3);
        const auto est = estimate_channels(EstimatorId::prb, input_of(in));
        REQUIRE(est.count() == 6);
        worst = std::max(worst, prb_max_error(est, in));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("large priors switch to the inversion-free form without changing the answer")
{
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep)
    {
        auto in = ci_instance(rng, false);
        in.prior[0] = 1e7;
        const auto e = estimate_channels(EstimatorId::ci_diag, input_of(in));
        const CMatrix oracle = ci_oracle(in);
        CHECK(max_abs_error(e, oracle, in.detected, in.antennas) < 1e-7 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("scalar Wiener shrinkage")
{
    const auto book = make_orthogonal_pilots(1);
    CMatrix y(1, 1);
    y(0, 0) = cplx(0.8, -1.4);
    const std::vector<double> prior{1.0};
    const CMatrix est = lmmse_ci_diag(y, book.phi, prior, 1.0);
    CHECK(std::abs(est(0, 0) - y(0, 0) / 2.0) < 1e-15);
    CHECK(std::abs(lmmse_ci_per_ue(y, book.phi.col(0), 1.0, 1.0, 1.0)(0) - y(0, 0) / 2.0) < 1e-15);
}

TEST_CASE("orthogonal pilots decouple the joint estimator")
{
    Rng rng(5);
    const int tau = 6;
    const auto book = make_orthogonal_pilots(4, tau);
    const double rho = 3.0;
    const std::vector<double> prior{0.5, 2.0, 1.0, 0.1};
    const CMatrix y = testutil::random_matrix(tau, 5, rng);
    const CMatrix est = lmmse_ci_diag(y, book.phi, prior, rho);
    for (int k = 0; k < 4; ++k)
    {
        const double gain = tau * rho * prior[static_cast<std::size_t>(k)] / (tau * rho * prior[static_cast<std::size_t>(k)] + 1.0);
        const CVector matched = y.transpose() * book.phi.col(k).conjugate() / std::sqrt(tau * rho);
        CHECK((est.row(k).transpose() - gain * matched).norm() < 1e-12);
        const CVector per_ue = lmmse_ci_per_ue(y, book.phi.col(k), 1.0, prior[static_cast<std::size_t>(k)], rho);
        CHECK((per_ue - est.row(k).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("per-UE estimator limits")
{
    Rng rng(6);
    const int tau = 4;
    const auto book = make_orthogonal_pilots(2, tau);
    const double rho = 2.0;
    const CMatrix y = testutil::random_matrix(tau, 3, rng);
    const CVector matched = y.transpose() * book.phi.col(1).conjugate() / std::sqrt(tau * rho);
    CHECK((lmmse_ci_per_ue(y, book.phi.col(1), 1.0, 1e12, rho) - matched).norm() < 1e-9 * matched.norm());

    // noise-free single UE: bias factor tau rho c / (tau rho c + 1)
    const double c = 0.7;
    const CMatrix g = testutil::random_matrix(1, 3, rng);
    const CMatrix clean = std::sqrt(tau * rho) * book.phi.col(0) * g;
    const CVector est = lmmse_ci_per_ue(clean, book.phi.col(0), 1.0, c, rho);
    CHECK((est - tau * rho * c / (tau * rho * c + 1.0) * g.transpose()).norm() < 1e-12);

    CHECK_THROWS_AS(lmmse_ci_per_ue(y, book.phi.col(0), 1.0, 0.0, rho), std::invalid_argument);
}

TEST_CASE("empty detected set gives zero estimates")
{
    Rng rng(7);
    CiInstance in = ci_instance(rng, true);
    in.detected.clear();
    for (auto id : {EstimatorId::ci_diag, EstimatorId::ci_per_ue})
    {
        const auto e = estimate_channels(id, input_of(in));
        REQUIRE(e.count() == in.subbands);
        for (const auto &u : e.units)
            CHECK(u.norm() == 0.0);
    }
    PrbInstance p = prb_instance(rng, false);
    EstimationInput e;
    e.received = &p.received;
    e.pilots = &p.book;
    e.amplitude = p.amplitude;
    e.covariance = p.covariance;
    e.pilot_snr = p.rho;
    e.antennas = p.antennas;
    const auto est = estimate_channels(EstimatorId::prb, e);
    REQUIRE(est.count() == 6);
    for (const auto &u : est.units)
        CHECK(u.norm() == 0.0);
}

TEST_CASE("PRB estimator on a flat noise-free channel")
{
    const auto book = make_gold_pilots(3, 24, 1, PilotMode::gold_prb);
    Rng rng(8);
    const double beta = 0.8;
    const double rho = 5.0;
    const int m = 3;
    const CMatrix g = testutil::random_matrix(1, m, rng, beta);
    const CMatrix y = std::sqrt(24.0 * rho) * book.phi.col(1) * g;
    const std::vector<CMatrix> cov(3, CMatrix::Constant(6, 6, beta));
    const std::vector<int> set{1};
    const CMatrix est = lmmse_prb(y, assemble_prb_matrix(book, set), assemble_prb_prior(cov, set), rho);
    const double shrink = 24.0 * rho * beta / (24.0 * rho * beta + 1.0);
    for (int s = 0; s < 6; ++s)
        CHECK((est.row(s) - shrink * g).norm() < 1e-12);
}

TEST_CASE("diagonal PRB prior decouples into per-block problems")
{
    const auto book = make_gold_pilots(2, 24, 3, PilotMode::gold_prb);
    Rng rng(9);
    const double rho = 2.0;
    const int m = 2;
    std::vector<CMatrix> cov;
    for (int k = 0; k < 2; ++k)
    {
        CMatrix c = CMatrix::Zero(6, 6);
        for (int s = 0; s < 6; ++s)
            c(s, s) = 0.2 + 0.3 * s + k;
        cov.push_back(c);
    }
    const std::vector<int> set{0, 1};
    const CMatrix y = testutil::random_matrix(24, m, rng);
    const CMatrix est = lmmse_prb(y, assemble_prb_matrix(book, set), assemble_prb_prior(cov, set), rho);
    for (int s = 0; s < 6; ++s)
    {
        const CMatrix block_y = y.middleRows(4 * s, 4);
        const CMatrix block_phi = book.phi.middleRows(4 * s, 4);
        const std::vector<double> prior{cov[0](s, s).real(), cov[1](s, s).real()};
        // same amplitude: sqrt(24 rho) on a 4-row block is sqrt(4 * 6 rho)
        const CMatrix local = lmmse_ci_diag(block_y, block_phi, prior, 6.0 * rho);
        CHECK((est.middleRows(2 * s, 2) - local).norm() < 1e-12);
    }
}

TEST_CASE("estimation error is orthogonal to the observations")
{
    Rng rng(10);
    const auto book = make_gold_pilots(2, 3, 5);
    const double rho = 1.5;
    const std::vector<double> prior{1.0, 0.4};
    const int samples = 100000;
    CMatrix g(2, samples);
    for (int k = 0; k < 2; ++k)
        g.row(k) = testutil::random_matrix(1, samples, rng, prior[static_cast<std::size_t>(k)]);
    const CMatrix y = std::sqrt(3.0 * rho) * book.phi * g + testutil::random_matrix(3, samples, rng);
    const CMatrix est = lmmse_ci_diag(y, book.phi, prior, rho);
    const CMatrix err = g - est;
    for (int k = 0; k < 2; ++k)
        for (int t = 0; t < 3; ++t)
        {
            const cplx cross = err.row(k).dot(y.row(t));
            const double corr = std::abs(cross) / (err.row(k).norm() * y.row(t).norm());
            CHECK(corr < 0.02);
        }
}

TEST_CASE("estimation MSE decreases with pilot SNR")
{
    Rng rng(11);
    const auto book = make_gold_pilots(2, 2, 7);
    const std::vector<double> prior{1.0, 1.0};
    const int trials = 10000;
    double last = 1e300;
    for (int i = 0; i < 10; ++i)
    {
        const double rho = std::pow(10.0, -2.0 + 0.4 * i);
        Rng draw(12);
        const CMatrix g = testutil::random_matrix(2, trials, draw);
        const CMatrix y = std::sqrt(2.0 * rho) * book.phi * g + testutil::random_matrix(2, trials, draw);
        const double mse = (g - lmmse_ci_diag(y, book.phi, prior, rho)).squaredNorm() / (2.0 * trials);
        CHECK(mse <= last);
        last = mse;
    }
}

TEST_CASE("estimator input validation")
{
    Rng rng(13);
    CiInstance in = ci_instance(rng, false);
    CHECK_THROWS_AS(estimate_channels(EstimatorId::ci_per_ue, input_of(in)), std::invalid_argument);
    CHECK_THROWS_AS(estimate_channels(EstimatorId::automatic, input_of(in)), std::invalid_argument);
    EstimationInput bad = input_of(in);
    bad.subbands += 1;
    CHECK_THROWS_AS(estimate_channels(EstimatorId::ci_diag, bad), std::invalid_argument);
}
