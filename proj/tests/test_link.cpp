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
#include "test_util.hpp"
#include "urllc/link.hpp"

#include <algorithm>

using namespace urllc;

TEST_CASE("labels")
{
    CHECK(classify(true, true) == UeLabel::detected_active);
    CHECK(classify(true, false) == UeLabel::misdetected);
    CHECK(classify(false, true) == UeLabel::false_alarm);
    CHECK(classify(false, false) == UeLabel::true_inactive);
    CHECK(to_string(UeLabel::false_alarm) == "false-alarm");
    CHECK(to_string(UeLabel::detected_active) == "detected-active");
}

TEST_CASE("single-UE receiver is e1 / 2")
{
    CMatrix g = CMatrix::Zero(3, 1);
    g(0, 0) = 1.0;
    const std::vector<double> eta{1.0};
    const std::vector<int> set{0};
    const CMatrix v = build_mmse_receiver(g, eta, 1.0, set);
    CMatrix expect = CMatrix::Zero(3, 1);
    expect(0, 0) = 0.5;
    CHECK((v - expect).norm() < 1e-15);
}

TEST_CASE("receiver matches the direct MMSE formula")
{
    Rng rng(1);
    const CMatrix g = testutil::random_matrix(6, 5, rng);
    const std::vector<double> eta{1.0, 0.3, 0.7, 0.0, 0.5};
    const std::vector<int> set{0, 1, 3, 4};
    const double rho = 4.0;
    const CMatrix v = build_mmse_receiver(g, eta, rho, set);
    CMatrix r = CMatrix::Identity(6, 6);
    for (int k : set)
        r += rho * eta[static_cast<std::size_t>(k)] * g.col(k) * g.col(k).adjoint();
    const CMatrix r_inv = r.inverse();
    for (int k : set)
        CHECK((v.col(k) - std::sqrt(rho * eta[static_cast<std::size_t>(k)]) * r_inv * g.col(k)).norm() < 1e-12);
    CHECK(v.col(2).norm() == 0.0);
    CHECK(v.col(3).norm() == 0.0); // eta = 0
}

TEST_CASE("receiver is rotation-equivariant")
{
    Rng rng(2);
    const CMatrix g = testutil::random_matrix(5, 3, rng);
    const Eigen::HouseholderQR<CMatrix> qr(testutil::random_matrix(5, 5, rng));
    const CMatrix q = qr.householderQ();
    const std::vector<double> eta{1.0, 0.5, 0.25};
    const std::vector<int> set{0, 1, 2};
    const CMatrix v = build_mmse_receiver(g, eta, 2.0, set);
    const CMatrix vq = build_mmse_receiver(q * g, eta, 2.0, set);
    CHECK((vq - q * v).norm() < 1e-12);

    const auto s = instantaneous_sinr(v, g, eta, 2.0, set, set);
    const auto sq = instantaneous_sinr(vq, q * g, eta, 2.0, set, set);
    for (int k = 0; k < 3; ++k)
        CHECK(std::abs(sq(k) - s(k)) < 1e-9 * s(k));
}

TEST_CASE("single-UE SINR with perfect CSI is rho eta |g|^2")
{
    Rng rng(3);
    const CMatrix g = testutil::random_matrix(8, 1, rng);
    const std::vector<double> eta{0.6};
    const std::vector<int> set{0};
    const CMatrix v = build_mmse_receiver(g, eta, 3.0, set);
    const double sinr = instantaneous_sinr(v.col(0), g, eta, 3.0, set, 0);
    CHECK(sinr == doctest::Approx(3.0 * 0.6 * g.col(0).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("zero channel or zero receiver gives zero SINR")
{
    Rng rng(4);
    CMatrix g = testutil::random_matrix(4, 2, rng);
    g.col(1).setZero();
    const std::vector<double> eta{1.0, 1.0};
    const std::vector<int> set{0, 1};
    const CMatrix v = build_mmse_receiver(g, eta, 1.0, set);
    CHECK(instantaneous_sinr(v.col(1), g, eta, 1.0, set, 1) == 0.0);
    CHECK(instantaneous_sinr(CVector::Zero(4), g, eta, 1.0, set, 0) == 0.0);
}

TEST_CASE("batch SINR agrees with the per-UE form")
{
    Rng rng(5);
    const CMatrix g = testutil::random_matrix(6, 5, rng);
    const CMatrix ghat = g + testutil::random_matrix(6, 5, rng, 0.1);
    const std::vector<double> eta{1.0, 0.3, 0.7, 0.2, 0.5};
    const std::vector<int> active{0, 2, 3};
    const std::vector<int> detected{0, 2, 4};
    const CMatrix v = build_mmse_receiver(ghat, eta, 2.0, detected);
    const RVector batch = instantaneous_sinr(v, g, eta, 2.0, active, detected);
    for (int k : {0, 2})
        CHECK(batch(k) == doctest::Approx(instantaneous_sinr(v.col(k), g, eta, 2.0, active, k)).epsilon(1e-12));
    CHECK(batch(1) == 0.0);
    CHECK(batch(3) == 0.0);
    CHECK(batch(4) == 0.0); // false alarm: receiver but no signal
}

TEST_CASE("MMSE combiner built from true channels is SINR-optimal")
{
    Rng rng(6);
    for (int rep = 0; rep < 100; ++rep)
    {
        const CMatrix g = testutil::random_matrix(4, 3, rng);
        const std::vector<double> eta{1.0, 0.4, 0.8};
        const std::vector<int> set{0, 1, 2};
        const double rho = 2.0;
        const CMatrix v = build_mmse_receiver(g, eta, rho, set);
        for (int k = 0; k < 3; ++k)
        {
            const double best = instantaneous_sinr(v.col(k), g, eta, rho, set, k);
            for (int trial = 0; trial < 20; ++trial)
            {
                CVector u = testutil::random_matrix(4, 1, rng);
                u.normalize();
                CHECK(instantaneous_sinr(u, g, eta, rho, set, k) <= best * (1.0 + 1e-9));
            }
        }
    }
}

TEST_CASE("false alarms never help a true UE")
{
    Rng rng(7);
    std::vector<double> effect;
    for (int rep = 0; rep < 1000; ++rep)
    {
        const int m = 8;
        const CMatrix g = testutil::random_matrix(m, 4, rng);
        CMatrix ghat = g;
        ghat.col(3) = testutil::random_matrix(m, 1, rng, 0.3); // phantom estimate
        const std::vector<double> eta{1.0, 1.0, 1.0, 1.0};
        const std::vector<int> active{0, 1, 2};
        const std::vector<int> with_fa{0, 1, 2, 3};
        const CMatrix v0 = build_mmse_receiver(ghat, eta, 5.0, active);
        const CMatrix v1 = build_mmse_receiver(ghat, eta, 5.0, with_fa);
        const RVector s0 = instantaneous_sinr(v0, g, eta, 5.0, active, active);
        const RVector s1 = instantaneous_sinr(v1, g, eta, 5.0, active, with_fa);
        for (int k : active)
        {
            effect.push_back(s1(k) - s0(k));
            CHECK(s1(k) <= s0(k) * (1.0 + 1e-9));
        }
    }
    std::nth_element(effect.begin(), effect.begin() + static_cast<long>(effect.size() / 2), effect.end());
    CHECK(effect[effect.size() / 2] <= 0.0);
}

TEST_CASE("throughput formula")
{
    // (118 / 168) * 40 MHz * log2(2)
    CHECK(effective_throughput(1.0 / decoding_penalty, 168, 50, 40e6) ==
          doctest::Approx(28095238.095238093).epsilon(1e-9));
    CHECK(effective_throughput(0.0, 168, 50, 40e6) == 0.0);
    CHECK(effective_throughput(100.0, 168, 168, 40e6) == 0.0);
    CHECK(decoding_penalty == doctest::Approx(std::pow(10.0, -0.1)).epsilon(1e-15));

    double last = -1.0;
    for (double s = 0.0; s < 1e4; s = s * 1.5 + 0.01)
    {
        const double t = effective_throughput(s, 168, 24, 40e6);
        CHECK(t > last);
        last = t;
    }
    CHECK(effective_throughput(3.0, 168, 24, 20e6) < effective_throughput(3.0, 168, 24, 40e6));

    Scenario sc;
    sc.pilot_length = 50;
    CHECK(effective_throughput(2.0, sc) == effective_throughput(2.0, 168, 50, 40e6));
}
