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
#include <random>
#include <string>
#include <vector>

#include "opensim/common.hpp"
#include "opensim/topology.hpp"

namespace opensim::ctl {

struct ProxyLoad {
    std::string id;
    double load = 0;      // cps-equivalent
    double capacity = 0;  // cps at 100% cpu
    double cpu = 0;
    double mem = 0;
    bool reachable = false;
    bool draining = false;
    double last_update_s = 0;
    std::uint64_t registered = 0;  // registration sequence, oldest first
};

struct ProxyLoadView {
    std::vector<ProxyLoad> proxies;  // natural id order

    const ProxyLoad* find(const std::string& id) const;
};

struct EstimatorConfig {
    double window_s = 1.0;
    double poll_interval_s = 0.1;
    int staleness_polls = 3;
};

// Load of each proxy: the background rate seen on its access port plus the
// calls the controller assigned to it over the trailing window.
class LoadEstimator {
public:
    explicit LoadEstimator(EstimatorConfig cfg = {}) : cfg_(cfg) {}

    void register_proxy(const std::string& id, double capacity, SimTime now);
    void remove_proxy(const std::string& id);
    bool known(const std::string& id) const { return proxies_.count(id) > 0; }
    void set_draining(const std::string& id, bool draining);

    void on_telemetry(const std::string& id, double cpu, double mem, SimTime now);
    // Cumulative non-SIP packet counter of the proxy's access port.
    void on_port_sample(const std::string& id, double other_app_packets, SimTime now);
    void on_assignment(const std::string& id, SimTime now);

    ProxyLoadView view(SimTime now);
    const EstimatorConfig& config() const { return cfg_; }

    // Proxies that just crossed the staleness bound; reported once.
    std::vector<std::string> newly_unreachable(SimTime now);

private:
    struct State {
        double capacity = 0;
        double cpu = 0;
        double mem = 0;
        bool draining = false;
        SimTime last_update = 0;
        bool ever_updated = false;
        bool reported_down = false;
        std::uint64_t registered = 0;
        std::deque<std::pair<SimTime, double>> port_samples;
        std::deque<SimTime> assignments;
    };

    bool reachable(const State& s, SimTime now) const;
    void trim(State& s, SimTime now) const;

    EstimatorConfig cfg_;
    std::uint64_t registrations_ = 0;
    std::map<std::string, State, NaturalLess> proxies_;
};

// FirstFit walks proxies oldest registration first, so the newest VM is the
// last to receive calls and the first to go idle.
enum class Strategy { MinLoad, RoundRobin, Random, FirstFit };

std::string_view to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view s);

class ProxySelector {
public:
    explicit ProxySelector(Strategy s, std::uint64_t seed = 1, double fill = 0.95)
        : strategy_(s), rng_(seed), fill_(fill) {}

    // Only reachable, non-draining proxies are candidates.
    std::string select(const ProxyLoadView& view);
    Strategy strategy() const { return strategy_; }

private:
    Strategy strategy_;
    std::mt19937_64 rng_;
    double fill_;
    std::string last_;  // round-robin pointer
};

}  // namespace opensim::ctl
