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

#include "urllc/rng.hpp"
#include "urllc/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testutil
{

inline urllc::CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, urllc::Rng &rng, double variance = 1.0)
{
    urllc::CMatrix m(rows, cols);
    urllc::ComplexGaussian(variance).fill(m, rng);
    return m;
}

// Hermitian positive definite with eigenvalues >= floor.
inline urllc::CMatrix random_hpd(Eigen::Index n, urllc::Rng &rng, double floor = 0.1)
{
    const urllc::CMatrix a = random_matrix(n, n, rng);
    return a * a.adjoint() + floor * urllc::CMatrix::Identity(n, n);
}

// Kolmogorov limiting survival function Q(x) = 2 sum (-1)^{j-1} exp(-2 j^2 x^2).
inline double kolmogorov_survival(double x)
{
    if (x < 0.2)
        return 1.0;
    double q = 0.0;
    for (int j = 1; j <= 100; ++j)
    {
        const double term = std::exp(-2.0 * j * j * x * x);
        q += (j % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16)
            break;
    }
    return std::clamp(q, 0.0, 1.0);
}

// One-sample KS p-value of `u` against Uniform(0, 1).
inline double ks_uniform_pvalue(std::vector<double> u)
{
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
    const double sn = std::sqrt(n);
    return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
}

// Two-sample KS p-value.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size())
    {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
}

} // namespace testutil
