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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opensim/balancer.hpp"
#include "opensim/common.hpp"
#include "opensim/engine.hpp"
#include "opensim/load.hpp"
#include "opensim/topology.hpp"

namespace opensim::harness {

enum class RunMode { Partial, Full, Nfv, Baseline };

std::string_view to_string(RunMode m);
std::optional<RunMode> run_mode_from_string(std::string_view s);

enum class ErrorKind { ParseError, UnknownReference, InvariantViolation, IoError, UnknownPreset };

class ScenarioError : public Error<ErrorKind> {
public:
    ScenarioError(ErrorKind kind, const std::string& what, int line = 0)
        : Error<ErrorKind>(kind, what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct SwitchSpec {
    std::string id;
    double delay_ms = 0.1;
    bool operator==(const SwitchSpec&) const = default;
};

struct LinkSpec {
    std::string a;
    std::string b;
    double mbps = 1000;
    double delay_ms = 0.1;
    bool operator==(const LinkSpec&) const = default;
};

enum class HostRole { Uac, Uas };

struct HostSpec {
    std::string id;
    HostRole role = HostRole::Uac;
    Ipv4 ip;
    std::string sw;
    double mbps = 1000;
    double delay_ms = 0.1;
    bool registers = false;  // UAS only: REGISTER with the service address at start
    std::string callee;      // UAC only: user part of the To URI
    bool operator==(const HostSpec&) const = default;
};

struct ProxySpec {
    std::string id;
    Ipv4 ip;
    std::string sw;
    double capacity = 1000;
    double background = 0;  // packets/s of non-SIP traffic
    double mbps = 1000;
    double delay_ms = 0.1;
    bool operator==(const ProxySpec&) const = default;
};

struct BalancerSpec {
    std::string id;
    Ipv4 ip;
    std::string sw;
    double capacity = 5000;
    double mbps = 1000;
    double delay_ms = 0.1;
    bool operator==(const BalancerSpec&) const = default;
};

struct PmSpec {
    std::string id;
    std::string sw;
    double cores = 2;
    double mbps = 1000;
    double delay_ms = 0.1;
    bool operator==(const PmSpec&) const = default;
};

struct ControllerSpec {
    double capacity = 6650;  // work units per second
    double latency_ms = 4.5;
    double channel_ms = 0.5;
    double poll_s = 0.1;
    double invite_cost = 1.35;  // Full mode: work units per Invite
    int staleness = 3;
    double window_s = 1.0;
    ctl::EdgeWeight weight = ctl::EdgeWeight::Hops;
    double inflation_cap = 100;
    bool operator==(const ControllerSpec&) const = default;
};

struct NfvSpec {
    double vm_capacity = 1000;
    double scale_out = 90;
    double scale_in = 10;
    double interval_s = 1;
    double boot_delay_s = 0;
    double vm_reservation = 1;
    int initial_vms = 1;
    bool operator==(const NfvSpec&) const = default;
};

struct ScenarioConfig {
    std::string name = "unnamed";
    RunMode mode = RunMode::Partial;
    lb::Algorithm balancer = lb::Algorithm::Tlwl;
    ctl::Strategy strategy = ctl::Strategy::MinLoad;
    double fill = 0.95;
    double duration_s = 0;
    double drain_s = 3;
    std::uint64_t seed = 1;
    double sampling_s = 1;
    double hold_s = 0;
    double call_timeout_s = 2;
    std::uint32_t message_bytes = 800;
    std::uint32_t background_bytes = 1000;
    bool link_metrics = false;
    sim::ArrivalProcess arrival = sim::ArrivalProcess::Deterministic;
    Ipv4 service_ip = Ipv4::parse("10.0.0.100");
    std::string domain = "opensip.example";

    ControllerSpec controller;
    NfvSpec nfv;
    std::vector<SwitchSpec> switches;
    std::vector<LinkSpec> links;
    std::vector<HostSpec> hosts;
    std::vector<ProxySpec> proxies;
    std::vector<BalancerSpec> balancers;
    std::vector<PmSpec> pms;
    std::vector<sim::Segment> segments;
    sim::FailureSchedule failures;

    bool operator==(const ScenarioConfig&) const;

    sim::LoadProfile profile() const { return {segments, arrival}; }
    const HostSpec* uac() const;
};

// Parses scenario text without cross-checking.
ScenarioConfig parse_scenario(std::string_view text);
// Throws UnknownReference or InvariantViolation.
void validate(const ScenarioConfig& cfg);
// Canonical text; parse_scenario(print_scenario(c)) == c.
std::string print_scenario(const ScenarioConfig& cfg);

// A bundled preset name or a path to a scenario file; the result is validated.
ScenarioConfig load_scenario(const std::string& name_or_path);
std::vector<std::string> preset_names();
std::optional<std::string_view> preset_text(std::string_view name);

}  // namespace opensim::harness
