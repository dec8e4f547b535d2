/*
 * Copyright 2026 The opensim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "opensim/controller.hpp"
#include "opensim/metrics.hpp"
#include "opensim/proxy.hpp"
#include "opensim/scenario.hpp"

namespace opensim::harness {

struct CallTotals {
    std::uint64_t generated = 0;
    std::uint64_t completed = 0;
    std::uint64_t rejected = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_progress = 0;  // still open when the run stopped
    double setup_ms_sum = 0;
    std::uint64_t setups = 0;

    double mean_setup_ms() const { return setups ? setup_ms_sum / static_cast<double>(setups) : 0.0; }
    bool conserved() const { return generated == completed + rejected + dropped + in_progress; }
};

// One SIP message delivered to a host, with the switches it crossed.
struct AuditRecord {
    std::string call_id;
    std::string message;  // sip::describe()
    std::string receiver;
    std::vector<std::string> hops;
};

struct RunOptions {
    std::ostream* trace = nullptr;
    bool audit = false;
};

struct RunResult {
    std::vector<MetricsRow> rows;
    std::vector<SystemRow> system;
    std::vector<OrchestrationRow> orchestration;
    CallTotals calls;
    ctl::ControllerCounters controller;
    std::uint64_t controller_handled = 0;  // PacketIns processed
    std::map<std::string, proxy::ProxyTotals, NaturalLess> proxies;
    std::uint64_t events = 0;

    std::vector<AuditRecord> audit;
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> segments;
};

enum class RunErrorKind { Runtime };
using RunError = Error<RunErrorKind>;

// Runs the scenario from t = 0 to duration + drain.
RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});

// Messages whose switch hops are not a contiguous run of one of their call's
// installed segments.
std::vector<std::string> flow_continuity_violations(const RunResult& r);

}  // namespace opensim::harness
