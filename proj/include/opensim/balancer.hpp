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

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "opensim/common.hpp"
#include "opensim/proxy.hpp"
#include "opensim/sip.hpp"

namespace opensim::lb {

enum class Algorithm { Tlwl, Fwar, Hwar };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(std::string_view s);

struct DispatchConfig {
    Algorithm algorithm = Algorithm::Tlwl;
    double invite_weight = 1.75;
    double bye_weight = 1.0;
    std::size_t window = 20;  // response-time samples per proxy
    double sample_ttl_s = 1.0;  // older samples no longer count; <= 0 keeps them forever
    double decay = 0.7;
    double stride_s = 1.0;
    std::size_t history = 10;  // stride snapshots kept
};

enum class ErrorKind { NoProxyAvailable, UnknownCall };
using LbError = Error<ErrorKind>;

// (current + sum_j decay^j * history[j-1]) / sum_j decay^j, history newest first.
double decayed_score(double current, const std::vector<double>& history, double decay);

// Call dispatch with session affinity by Call-ID.
class Dispatcher {
public:
    Dispatcher(DispatchConfig cfg, std::vector<std::string> proxies);

    std::string assign(const sip::Message& msg, SimTime now);
    // Completes transactions and records the proxy's Invite turnaround.
    void on_response(const sip::Message& rsp, SimTime now);
    void add_sample(const std::string& proxy, double ms, SimTime now);

    double counter(const std::string& proxy) const;
    // Over the samples still fresh at `now`; an empty window means 0.
    double window_mean(const std::string& proxy, SimTime now) const;
    std::size_t window_size(const std::string& proxy, SimTime now) const;
    double hwar_score(const std::string& proxy, SimTime now);
    std::optional<std::string> affinity(const std::string& call_id) const;
    std::size_t live_calls() const { return calls_.size(); }
    const DispatchConfig& config() const { return cfg_; }

private:
    struct Sample {
        SimTime at = 0;
        double ms = 0;
    };
    struct ProxyState {
        double counter = 0;
        std::deque<Sample> window;
        std::vector<double> history;  // newest first
        std::int64_t stride = 0;
    };
    struct Call {
        std::string proxy;
        SimTime invite_at = 0;
        bool invite_open = true;
        bool bye_open = false;
        bool sampled = false;
    };

    void roll(ProxyState& p, SimTime now) const;
    bool fresh(const Sample& s, SimTime now) const;
    double mean(const std::deque<Sample>& w, SimTime now) const;
    std::string pick(SimTime now);

    DispatchConfig cfg_;
    std::vector<std::string> order_;  // natural id order
    std::map<std::string, ProxyState, NaturalLess> proxies_;
    std::unordered_map<std::string, Call> calls_;
};

struct BalancerConfig {
    std::string id;
    Ipv4 ip;
    double capacity_cps = 5000;
    double call_weight = 7.0;  // every message of a call costs one unit
    double window_s = 1.0;
    double tick_s = 0.1;
    double inflation_cap = 100;
    DispatchConfig dispatch;
    std::vector<std::pair<std::string, Ipv4>> proxies;
};

// The front-end balancer entity: admission, dispatch, Via/Record-Route
// handling and the same delay model as a proxy.
class Balancer {
public:
    explicit Balancer(BalancerConfig cfg);

    proxy::ProxyOutcome process_message(const sip::Message& msg, Ipv4 from, SimTime now);
    void resource_tick(SimTime now) { res_.tick(now, 0); }
    double cpu() const { return res_.cpu(); }
    const std::string& id() const { return cfg_.id; }
    const Dispatcher& dispatcher() const { return dispatch_; }

    struct Interval {
        std::uint64_t completed = 0;
        std::uint64_t rejected = 0;
        double response_ms_sum = 0;
        std::uint64_t responses = 0;
        std::uint64_t messages = 0;
    };
    Interval take_interval();

private:
    BalancerConfig cfg_;
    std::string via_host_;
    proxy::ResourceModel res_;
    Dispatcher dispatch_;
    std::unordered_map<std::string, Ipv4> caller_;
    std::unordered_map<std::string, SimTime> invite_at_;
    std::map<std::string, Ipv4> proxy_ip_;
    Interval interval_;
};

}  // namespace opensim::lb
