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

#include <span>
#include <vector>

namespace urllc
{

struct QuantileResult
{
    double value = 0.0;
    bool reliable = true; // false when fewer than 10 / p samples back the estimate
};

// Lower order-statistic quantile of already sorted samples: element
// floor(p * (n - 1)). Ties need no special handling since the samples are
// sorted. Throws std::invalid_argument on an empty sample or p outside [0, 1].
QuantileResult sorted_quantile(std::span<const double> sorted, double p);

// Copies, sorts and calls sorted_quantile.
QuantileResult quantile(std::span<const double> samples, double p);

// Empirical CDF points (value, probability) of sorted samples, thinned to at
// most max_points entries while always keeping the lowest order statistics.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> sorted, std::size_t max_points);

} // namespace urllc
