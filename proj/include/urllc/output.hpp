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

#include "urllc/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace urllc
{

// trial,ue,beta,eta,label,sinr_db,throughput_bps; one row per active or
// falsely detected UE. Misdetected and false-alarm rows carry sinr_db -inf.
void write_samples_csv(const RunResult &result, std::ostream &out);

// key=value lines: counts, P_MD, P_FA, quantiles, seed, scenario hash, ...
void write_summary(const RunResult &result, std::ostream &out);

// probability,throughput_bps points of the empirical throughput CDF.
void write_cdf_csv(const RunResult &result, std::ostream &out, std::size_t max_points = 2000);

// samples.csv, summary.txt, cdf.csv and scenario.ini under `dir`.
void write_run_directory(const RunResult &result, const std::filesystem::path &dir);

std::map<std::string, std::string> read_summary(std::istream &in);

// Rebuilds a RunResult (samples, counts, quantiles) from write_run_directory output.
RunResult read_run_directory(const std::filesystem::path &dir);

} // namespace urllc
