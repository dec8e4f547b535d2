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

#include <array>
#include <deque>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "opensim/common.hpp"
#include "opensim/sip.hpp"

namespace opensim::proxy {

struct ProxyConfig {
    std::string id;
    Ipv4 ip;
    std::string via_host;        // host written into Via; defaults to ip
    double capacity_cps = 1000;  // calls per second at 100% cpu
    double background_pps = 0;   // one packet/s costs one call-equivalent/s
    double invite_weight = 1.75;
    double other_weight = 1.0;
    // Weighted cost of one complete call: Invite, the generated 100 Trying,
    // 180, 200, Ack, Bye and its 200.
    double call_weight = 7.75;
    double mem_base = 30;
    double mem_per_transaction = 0.01;
    double window_s = 1.0;
    double tick_s = 0.1;
    double inflation_cap = 100;
    bool record_route = true;
    Ipv4 default_route;  // callee address when the registrar has no binding
};

// Shared delay model of proxies and balancers: a constant service time per
// weighted unit, stretched by 1/(1-u) and capped.
double inflation(double cpu_percent, double cap);

// Windowed work accounting and delay model.
class ResourceModel {
public:
    ResourceModel(double capacity_cps, double call_weight, double window_s, double tick_s, double inflation_cap);

    void charge(double weight, SimTime now);
    // Recomputes cpu from the last full window of ticks.
    double tick(SimTime now, double background);
    // Reserves one call if background + admitted calls stay below capacity.
    bool admit(SimTime now, double background);
    double reserved_cpu(SimTime now, double background);
    SimTime service_time(double weight) const;
    void clear();

    double cpu() const { return cpu_; }
    double capacity() const { return capacity_; }
    void set_capacity(double c) { capacity_ = c; }

private:
    void advance(SimTime now);
    void trim(SimTime now);

    double capacity_;
    double call_weight_;
    double window_s_;
    SimTime tick_us_;
    double inflation_cap_;
    double cpu_ = 0;
    std::int64_t window_ticks_ = 1;
    std::vector<double> work_;
    std::int64_t work_tick_ = 0;
    std::deque<SimTime> admissions_;
};

struct Emission {
    sip::Message msg;
    Ipv4 dst;
};

struct ProxyOutcome {
    enum class Kind { Forwarded, Responded, Rejected, Dropped };
    Kind kind = Kind::Dropped;
    std::vector<Emission> out;
    SimTime service_time = 0;
};

enum class ErrorKind { ProxyDown };
using ProxyError = Error<ErrorKind>;

struct ProxyTotals {
    std::uint64_t processed = 0;  // received plus generated provisional responses
    std::uint64_t received = 0;
    std::uint64_t admitted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t completed = 0;
    std::uint64_t dropped_on_failure = 0;
};

class Proxy {
public:
    explicit Proxy(ProxyConfig cfg);

    const ProxyConfig& config() const { return cfg_; }
    const std::string& id() const { return cfg_.id; }
    bool available() const { return available_; }

    // `from` is the address of the previous hop.
    ProxyOutcome process_message(const sip::Message& msg, Ipv4 from, SimTime now);
    // Recomputes cpu/mem from the trailing window.
    void resource_tick(SimTime now);
    void set_availability(bool available, SimTime now);
    void set_background(double pps) { cfg_.background_pps = pps; }
    double background() const { return available_ ? cfg_.background_pps : 0.0; }

    double cpu() const { return res_.cpu(); }
    double mem() const { return mem_; }
    // cpu implied by the calls admitted over the window; admission stops at 100.
    double reserved_cpu(SimTime now);
    std::size_t active_transactions() const { return active_transactions_; }
    std::size_t dialogs() const { return dialogs_.size(); }
    const ProxyTotals& totals() const { return totals_; }

    // Per-interval figures, reset by take_interval().
    struct Interval {
        std::uint64_t completed = 0;
        std::uint64_t rejected = 0;
        double response_ms_sum = 0;
        std::uint64_t responses = 0;
    };
    Interval take_interval();

    void register_binding(const std::string& uri, Ipv4 ip) { registrar_[uri] = ip; }

private:
    struct Dialog {
        Ipv4 caller;
        Ipv4 callee;
        SimTime invite_at = 0;
        bool invite_open = true;
        bool bye_open = false;
    };

    sip::Message forwarded(const sip::Message& msg, bool add_route) const;

    ProxyConfig cfg_;
    bool available_ = true;
    ResourceModel res_;
    double mem_ = 0;
    std::size_t active_transactions_ = 0;
    std::unordered_map<std::string, Dialog> dialogs_;
    std::map<std::string, Ipv4> registrar_;
    ProxyTotals totals_;
    Interval interval_;
};

}  // namespace opensim::proxy
