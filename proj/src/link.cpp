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

#include "urllc/link.hpp"

#include <cmath>
#include <stdexcept>

namespace urllc
{

std::string_view to_string(UeLabel label)
{
    switch (label)
    {
    case UeLabel::detected_active:
        return "detected-active";
    case UeLabel::misdetected:
        return "misdetected";
    case UeLabel::false_alarm:
        return "false-alarm";
    case UeLabel::true_inactive:
        return "true-inactive";
    }
    return "unknown";
}

UeLabel classify(bool active, bool detected)
{
    if (active)
        return detected ? UeLabel::detected_active : UeLabel::misdetected;
    return detected ? UeLabel::false_alarm : UeLabel::true_inactive;
}

CMatrix build_mmse_receiver(const CMatrix &estimates, std::span<const double> eta, double data_snr,
                            std::span<const int> detected)
{
    const auto m = estimates.rows();
    CMatrix v = CMatrix::Zero(m, estimates.cols());
    if (detected.empty())
        return v;
    if (static_cast<Eigen::Index>(eta.size()) != estimates.cols())
        throw std::invalid_argument("one power coefficient per UE required");

    // X = [sqrt(rho eta_k) ghat_k]_{k in B}; (X X^H + I)^{-1} X = X (X^H X + I)^{-1}
    const auto nb = static_cast<Eigen::Index>(detected.size());
    CMatrix x(m, nb);
    for (Eigen::Index a = 0; a < nb; ++a)
    {
        const int k = detected[static_cast<std::size_t>(a)];
        x.col(a) = std::sqrt(data_snr * eta[static_cast<std::size_t>(k)]) * estimates.col(k);
    }
    CMatrix gram = x.adjoint() * x;
    gram.diagonal().array() += 1.0;
    const CMatrix vb = x * gram.llt().solve(CMatrix::Identity(nb, nb));
    for (Eigen::Index a = 0; a < nb; ++a)
        v.col(detected[static_cast<std::size_t>(a)]) = vb.col(a);
    return v;
}

double instantaneous_sinr(const CVector &v, const CMatrix &channels, std::span<const double> eta, double data_snr,
                          std::span<const int> active, int k)
{
    const double noise = v.squaredNorm();
    if (noise == 0.0)
        return 0.0;
    const double signal = data_snr * eta[static_cast<std::size_t>(k)] * std::norm(v.dot(channels.col(k)));
    double interference = 0.0;
    for (int j : active)
        if (j != k)
            interference += data_snr * eta[static_cast<std::size_t>(j)] * std::norm(v.dot(channels.col(j)));
    return signal / (interference + noise);
}

RVector instantaneous_sinr(const CMatrix &receiver, const CMatrix &channels, std::span<const double> eta,
                           double data_snr, std::span<const int> active, std::span<const int> detected)
{
    RVector sinr = RVector::Zero(receiver.cols());
    if (detected.empty())
        return sinr;

    // |v_k^H g_j|^2 for k in B and j in A in one product
    const auto nb = static_cast<Eigen::Index>(detected.size());
    const auto na = static_cast<Eigen::Index>(active.size());
    CMatrix vb(receiver.rows(), nb);
    for (Eigen::Index a = 0; a < nb; ++a)
        vb.col(a) = receiver.col(detected[static_cast<std::size_t>(a)]);
    CMatrix ga(channels.rows(), na);
    RVector weight(na);
    for (Eigen::Index j = 0; j < na; ++j)
    {
        const int ue = active[static_cast<std::size_t>(j)];
        ga.col(j) = channels.col(ue);
        weight(j) = data_snr * eta[static_cast<std::size_t>(ue)];
    }
    const Eigen::MatrixXd power = (vb.adjoint() * ga).cwiseAbs2();

    for (Eigen::Index a = 0; a < nb; ++a)
    {
        const int k = detected[static_cast<std::size_t>(a)];
        const double noise = vb.col(a).squaredNorm();
        if (noise == 0.0)
            continue;
        double signal = 0.0;
        double interference = 0.0;
        for (Eigen::Index j = 0; j < na; ++j)
        {
            if (active[static_cast<std::size_t>(j)] == k)
                signal = weight(j) * power(a, j);
            else
                interference += weight(j) * power(a, j);
        }
        sinr(k) = signal / (interference + noise);
    }
    return sinr;
}

double effective_throughput(double sinr, int coherence_symbols, int pilot_length, double bandwidth_hz)
{
    const double fraction = static_cast<double>(coherence_symbols - pilot_length) / coherence_symbols;
    return fraction * bandwidth_hz * std::log2(1.0 + sinr * decoding_penalty);
}

double effective_throughput(double sinr, const Scenario &scenario)
{
    return effective_throughput(sinr, scenario.coherence_symbols, scenario.pilot_length, scenario.bandwidth_hz);
}

} // namespace urllc
