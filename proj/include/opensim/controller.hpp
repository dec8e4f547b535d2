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
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "opensim/dpi.hpp"
#include "opensim/load.hpp"
#include "opensim/openflow.hpp"
#include "opensim/sip.hpp"
#include "opensim/topology.hpp"

namespace opensim::ctl {

enum class Mode { Partial, Full, Nfv };

std::string_view to_string(Mode m);

struct ControllerConfig {
    Mode mode = Mode::Partial;
    Strategy strategy = Strategy::MinLoad;
    std::uint64_t seed = 1;
    double fill = 0.95;  // FirstFit target
    Ipv4 service_ip;     // address callers send requests to
    std::string service_host = "opensip";
    EdgeWeight weight = EdgeWeight::Hops;
    int rule_priority = 100;
    std::uint32_t message_bytes = 800;
    EstimatorConfig estimator;
};

struct RegistrarEntry {
    sip::HostPort contact;
    Ipv4 ip;
    double registered_s = 0;
};

struct InstalledRule {
    std::string switch_id;
    std::uint64_t cookie = 0;
};

struct SessionRecord {
    std::string call_id;
    std::string assigned;             // proxy id, or callee host in Full mode
    std::vector<std::string> path;    // caller switch .. destination switch
    std::vector<std::vector<std::string>> segments;  // every installed directed path
    sip::CallPhase phase = sip::CallPhase::Idle;
    std::vector<InstalledRule> rules;
    bool trying_sent = false;
};

struct ControllerCounters {
    std::uint64_t packet_ins = 0;
    std::uint64_t packet_outs = 0;
    std::uint64_t flow_mods = 0;
    std::uint64_t sessions_opened = 0;
    std::uint64_t sessions_closed = 0;
    std::uint64_t registrations = 0;
};

class Controller {
public:
    explicit Controller(ControllerConfig cfg);

    const ControllerConfig& config() const { return cfg_; }
    Mode mode() const { return cfg_.mode; }

    void set_topology(TopologyGraph g)
    {
        topo_ = std::move(g);
        routes_.clear();
    }
    const TopologyGraph& topology() const { return topo_; }

    // Proxies are hosts in the topology, named by their id.
    void add_proxy(const std::string& id, double capacity, SimTime now);
    void remove_proxy(const std::string& id);
    LoadEstimator& estimator() { return estimator_; }
    ProxyLoadView load_view(SimTime now) { return estimator_.view(now); }
    std::string select_proxy(const ProxyLoadView& view) { return selector_.select(view); }

    std::vector<of::ControllerMsg> handle_packet_in(const of::PacketIn& in, SimTime now);
    std::vector<of::FlowMod> terminate_session(const std::string& call_id);
    of::PacketOut register_user(const sip::Message& reg, const of::PacketIn& origin, SimTime now);
    std::optional<of::PacketOut> make_proxy_response(const sip::Message& invite, const of::PacketIn& origin);
    // Final response sent back out of the ingress port, e.g. 503 or 404.
    of::PacketOut reject(const of::PacketIn& origin, int code) const;

    // Removes every session pinned to a proxy that went away.
    std::vector<of::FlowMod> teardown_proxy(const std::string& proxy_id);

    const std::unordered_map<std::string, SessionRecord>& sessions() const { return sessions_; }
    const SessionRecord* session(const std::string& call_id) const;
    const dpi::SessionDatabase& session_db() const { return session_db_; }
    const std::map<std::string, RegistrarEntry>& registrar() const { return registrar_; }
    const ControllerCounters& counters() const { return counters_; }

private:
    std::vector<of::ControllerMsg> handle_invite(const of::PacketIn& in, const sip::Message& msg, SimTime now);
    std::vector<of::ControllerMsg> forward_only(const of::PacketIn& in, const sip::Message& msg);
    void install_segment(SessionRecord& rec, std::vector<of::ControllerMsg>& out,
                         std::vector<std::pair<std::string_view, std::uint32_t>>& seen,
                         const std::string& from_sw, const HostAttachment& to, Ipv4 match_dst);
    of::Packet reply_packet(const of::PacketIn& origin, sip::Message msg) const;
    // memoized shortest_path over the current topology
    const std::vector<std::string>& route(const std::string& src, const std::string& dst);

    ControllerConfig cfg_;
    TopologyGraph topo_;
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> routes_;
    LoadEstimator estimator_;
    ProxySelector selector_;
    dpi::SessionDatabase session_db_;
    std::unordered_map<std::string, SessionRecord> sessions_;
    std::map<std::string, RegistrarEntry> registrar_;
    std::map<std::string, double, NaturalLess> proxies_;  // id -> capacity
    std::uint64_t next_cookie_ = 1;
    ControllerCounters counters_;
};

}  // namespace opensim::ctl
