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

#include "urllc/types.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>

namespace urllc
{

using Rng = std::mt19937_64;

// Purpose tags for per-trial random streams. Every random draw in a trial
// comes from a stream seeded by (run seed, trial index, purpose, index), so
// a trial's outcome does not depend on how trials are scheduled.
enum class StreamPurpose : std::uint64_t
{
    population = 1,
    activity = 2,
    channel = 3,
    noise = 4,
    detection = 5,
    covariance = 6,
    variance_calibration = 7,
    threshold_calibration = 8,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose,
                          std::uint64_t index = 0);

inline Rng make_stream(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose,
                       std::uint64_t index = 0)
{
    return Rng(derive_seed(seed, trial, purpose, index));
}

// Circularly-symmetric complex Gaussian CN(0, variance).
class ComplexGaussian
{
public:
    explicit ComplexGaussian(double variance = 1.0) : normal_(0.0, std::sqrt(variance / 2.0)) {}

    cplx operator()(Rng &rng) { return {normal_(rng), normal_(rng)}; }

    void fill(CMatrix &m, Rng &rng)
    {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                m(i, j) = (*this)(rng);
    }

private:
    boost::random::normal_distribution<double> normal_; // ziggurat sampler
};

} // namespace urllc
