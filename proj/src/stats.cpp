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

#include "urllc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urllc
{

QuantileResult sorted_quantile(std::span<const double> sorted, double p)
{
    if (sorted.empty())
        throw std::invalid_argument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("quantile level must lie in [0, 1]");
    const auto n = sorted.size();
    const auto idx = static_cast<std::size_t>(std::floor(p * static_cast<double>(n - 1)));
    QuantileResult r;
    r.value = sorted[std::min(idx, n - 1)];
    const double tail = std::min(p, 1.0 - p);
    r.reliable = tail > 0.0 && static_cast<double>(n) >= 10.0 / tail;
    return r;
}

QuantileResult quantile(std::span<const double> samples, double p)
{
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    return sorted_quantile(s, p);
}

std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> sorted, std::size_t max_points)
{
    std::vector<std::pair<double, double>> out;
    const std::size_t n = sorted.size();
    if (n == 0 || max_points == 0)
        return out;
    const double total = static_cast<double>(n);
    // Lowest order statistics at full resolution, then an even stride.
    const std::size_t head = std::min(n, std::max<std::size_t>(max_points / 2, 1));
    const std::size_t rest = max_points > head ? max_points - head : 1;
    const std::size_t stride = std::max<std::size_t>(1, (n - head + rest - 1) / rest);
    for (std::size_t i = 0; i < head; ++i)
        out.emplace_back(sorted[i], static_cast<double>(i + 1) / total);
    for (std::size_t i = head + stride - 1; i < n; i += stride)
        out.emplace_back(sorted[i], static_cast<double>(i + 1) / total);
    if (out.back().second < 1.0)
        out.emplace_back(sorted[n - 1], 1.0);
    return out;
}

} // namespace urllc
