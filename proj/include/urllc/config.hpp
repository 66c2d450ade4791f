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

#include "urllc/scenario.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace urllc
{

// One scenario field as it appears in config files and on the command line.
struct ConfigField
{
    std::string_view section;
    std::string_view key;
    std::string_view help;
    bool hashed; // part of the scenario identity (excludes seed, cache path, ...)
    std::function<std::string(const Scenario &)> get;
    std::function<void(Scenario &, const std::string &)> set;
};

const std::vector<ConfigField> &config_fields();

// Throws std::invalid_argument for an unknown key or a malformed value.
void set_field(Scenario &scenario, std::string_view key, const std::string &value);
std::string get_field(const Scenario &scenario, std::string_view key);

// INI file with [section] headers; keys must be known fields.
Scenario load_config(const std::string &path, Scenario base = {});
Scenario parse_config(std::istream &in, Scenario base = {});
void write_config(const Scenario &scenario, std::ostream &out);

// "key=value" lines of every hashed field, in registry order.
std::string canonical_config(const Scenario &scenario);

// FNV-1a 64 over canonical_config of the resolved scenario.
std::uint64_t scenario_hash(const Scenario &scenario);

} // namespace urllc
