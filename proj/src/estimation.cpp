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

#include "urllc/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urllc
{

CMatrix lmmse_ci_diag(const CMatrix &received, const CMatrix &phi_b, std::span<const double> prior, double pilot_snr)
{
    const auto nb = phi_b.cols();
    if (nb == 0)
        return CMatrix::Zero(0, received.cols());
    if (static_cast<Eigen::Index>(prior.size()) != nb)
        throw std::invalid_argument("one prior entry per detected UE required");
    if (received.rows() != phi_b.rows())
        throw std::invalid_argument("received block does not match the pilot length");
    if (!(pilot_snr > 0.0))
        throw std::invalid_argument("pilot SNR must be positive");

    const double tau = static_cast<double>(phi_b.rows());
    const CMatrix a = std::sqrt(tau * pilot_snr) * phi_b;
    RVector c(nb);
    for (Eigen::Index i = 0; i < nb; ++i)
    {
        c(i) = prior[static_cast<std::size_t>(i)];
        if (!(c(i) > 0.0))
            throw std::invalid_argument("diagonal prior must be positive");
    }

    if (c.maxCoeff() > large_prior)
    {
        // C A^H (A C A^H + I)^{-1} y
        CMatrix inner = a * c.asDiagonal() * a.adjoint();
        inner.diagonal().array() += 1.0;
        return c.asDiagonal() * (a.adjoint() * inner.llt().solve(received));
    }
    CMatrix inner = a.adjoint() * a;
    inner.diagonal() += c.cwiseInverse().cast<cplx>();
    return inner.llt().solve(a.adjoint() * received);
}

CVector lmmse_ci_per_ue(const CMatrix &received, const CVector &phi_k, double amplitude, double prior,
                        double pilot_snr)
{
    if (!(prior > 0.0))
        throw std::invalid_argument("per-UE prior const_k must be positive");
    if (received.rows() != phi_k.size())
        throw std::invalid_argument("received block does not match the pilot length");
    const double snr = static_cast<double>(phi_k.size()) * pilot_snr * amplitude * amplitude;
    const double gain = std::sqrt(static_cast<double>(phi_k.size()) * pilot_snr) * amplitude * prior / (snr * prior + 1.0);
    return gain * (received.transpose() * phi_k.conjugate());
}

CMatrix assemble_prb_prior(std::span<const CMatrix> covariance, std::span<const int> ue_set)
{
    const auto n = static_cast<Eigen::Index>(ue_set.size());
    CMatrix c = CMatrix::Zero(prb_pilot_blocks * n, prb_pilot_blocks * n);
    for (Eigen::Index a = 0; a < n; ++a)
    {
        const auto k = static_cast<std::size_t>(ue_set[static_cast<std::size_t>(a)]);
        if (k >= covariance.size())
            throw std::out_of_range("UE without a subcarrier covariance");
        const CMatrix &ck = covariance[k];
        for (int s = 0; s < prb_pilot_blocks; ++s)
            for (int t = 0; t < prb_pilot_blocks; ++t)
                c(s * n + a, t * n + a) = ck(s, t);
    }
    return c;
}

CMatrix lmmse_prb(const CMatrix &received, const CMatrix &v, const CMatrix &c_tilde, double pilot_snr)
{
    if (v.cols() == 0)
        return CMatrix::Zero(0, received.cols());
    if (received.rows() != v.rows() || c_tilde.rows() != v.cols() || c_tilde.cols() != v.cols())
        throw std::invalid_argument("PRB estimator dimensions do not match");
    if (!(pilot_snr > 0.0))
        throw std::invalid_argument("pilot SNR must be positive");

    const double tau = static_cast<double>(v.rows());
    const CMatrix a = std::sqrt(tau * pilot_snr) * v;
    const CMatrix c = (c_tilde + c_tilde.adjoint()) / 2.0;

    Eigen::SelfAdjointEigenSolver<CMatrix> eig(c, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    if (top > 0.0 && eig.eigenvalues().minCoeff() > 1e-10 * top)
    {
        CMatrix inner = a.adjoint() * a;
        inner += c.llt().solve(CMatrix::Identity(c.rows(), c.cols()));
        inner = (inner + inner.adjoint()).eval() / 2.0;
        return inner.llt().solve(a.adjoint() * received);
    }
    // singular or ill-conditioned prior: C A^H (A C A^H + I)^{-1} y
    CMatrix inner = a * c * a.adjoint();
    inner.diagonal().array() += 1.0;
    return c * (a.adjoint() * inner.llt().solve(received));
}

namespace
{

ChannelEstimate zero_estimate(int units, int antennas, int ues)
{
    ChannelEstimate e;
    e.units.assign(static_cast<std::size_t>(units), CMatrix::Zero(antennas, ues));
    return e;
}

std::vector<double> amplitudes_of(const EstimationInput &in)
{
    std::vector<double> amp;
    for (int k : in.detected)
        amp.push_back(in.amplitude.empty() ? 1.0 : in.amplitude.at(static_cast<std::size_t>(k)));
    return amp;
}

} // namespace

ChannelEstimate estimate_channels(EstimatorId estimator, const EstimationInput &in)
{
    if (in.received == nullptr || in.pilots == nullptr)
        throw std::invalid_argument("estimation input is incomplete");
    const CMatrix &y = *in.received;
    const PilotBook &book = *in.pilots;
    const int m = in.antennas;
    const int k_total = book.ues();

    switch (estimator)
    {
    case EstimatorId::ci_diag:
    case EstimatorId::ci_per_ue:
    {
        const int n = in.subbands;
        if (y.cols() != static_cast<Eigen::Index>(m) * n)
            throw std::invalid_argument("received stack must have M * N columns");
        ChannelEstimate e = zero_estimate(n, m, k_total);
        if (in.detected.empty())
            return e;
        const auto amp = amplitudes_of(in);
        CMatrix rows; // |B| x (M * N)
        if (estimator == EstimatorId::ci_diag)
        {
            std::vector<double> prior;
            for (int k : in.detected)
                prior.push_back(in.prior.at(static_cast<std::size_t>(k)));
            rows = lmmse_ci_diag(y, select_pilots(book, in.detected, amp), prior, in.pilot_snr);
        }
        else
        {
            if (!book.orthogonal())
                throw std::invalid_argument("the per-UE estimator needs orthogonal pilots");
            rows.resize(static_cast<Eigen::Index>(in.detected.size()), y.cols());
            for (std::size_t a = 0; a < in.detected.size(); ++a)
            {
                const int k = in.detected[a];
                rows.row(static_cast<Eigen::Index>(a)) =
                    lmmse_ci_per_ue(y, book.phi.col(k), amp[a], in.prior.at(static_cast<std::size_t>(k)), in.pilot_snr)
                        .transpose();
            }
        }
        for (std::size_t a = 0; a < in.detected.size(); ++a)
            for (int f = 0; f < n; ++f)
                e.units[static_cast<std::size_t>(f)].col(in.detected[a]) =
                    rows.row(static_cast<Eigen::Index>(a)).segment(static_cast<Eigen::Index>(f) * m, m).transpose();
        return e;
    }
    case EstimatorId::prb:
    {
        if (y.rows() != prb_pilot_length || y.cols() != m)
            throw std::invalid_argument("PRB received block must be 24 x M");
        ChannelEstimate e = zero_estimate(prb_pilot_blocks, m, k_total);
        if (in.detected.empty())
            return e;
        const auto amp = amplitudes_of(in);
        const CMatrix v = assemble_prb_matrix(book, in.detected, amp);
        const CMatrix c = assemble_prb_prior(in.covariance, in.detected);
        const CMatrix est = lmmse_prb(y, v, c, in.pilot_snr);
        const auto nb = static_cast<Eigen::Index>(in.detected.size());
        for (int s = 0; s < prb_pilot_blocks; ++s)
            for (Eigen::Index a = 0; a < nb; ++a)
                e.units[static_cast<std::size_t>(s)].col(in.detected[static_cast<std::size_t>(a)]) =
                    est.row(s * nb + a).transpose();
        return e;
    }
    case EstimatorId::automatic:
        break;
    }
    throw std::invalid_argument("estimator must be resolved before use");
}

} // namespace urllc
