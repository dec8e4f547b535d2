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
#include <utility>
#include <vector>

#include "opensim/common.hpp"
#include "opensim/openflow.hpp"

namespace opensim::ctl {

using of::PortNo;

struct Edge {
    std::string a;
    PortNo a_port = 0;
    std::string b;
    PortNo b_port = 0;
    double mbps = 1000;
    double delay_ms = 0;
};

struct HostAttachment {
    std::string name;
    Ipv4 ip;
    std::string sw;
    PortNo port = 0;
};

struct Adjacent {
    std::string node;
    PortNo port;  // local port toward node
    double delay_ms;
};

// Switch-level graph plus host attachment points. Undirected.
class TopologyGraph {
public:
    void add_switch(const std::string& id);
    // Adds the edge once; a repeat of the same (a, a_port, b, b_port) is ignored.
    void add_edge(const Edge& e);
    void remove_edge(const std::string& a, const std::string& b);
    void attach_host(const HostAttachment& h);

    bool has_switch(const std::string& id) const { return adj_.count(id) > 0; }
    std::vector<std::string> switches() const;
    const std::vector<Adjacent>& neighbors(const std::string& id) const;
    std::optional<PortNo> port_toward(const std::string& from, const std::string& to) const;

    const HostAttachment* host(const std::string& name) const;
    const HostAttachment* host_by_ip(Ipv4 ip) const;
    const std::map<std::string, HostAttachment, NaturalLess>& hosts() const { return hosts_; }

    // Normalized (lower id first) undirected switch pairs.
    std::set<std::pair<std::string, std::string>> edge_set() const;
    std::size_t edge_count() const { return edge_set().size(); }

private:
    std::map<std::string, std::vector<Adjacent>, NaturalLess> adj_;
    std::map<std::string, HostAttachment, NaturalLess> hosts_;
    std::map<std::uint32_t, std::string> host_ip_;
};

enum class ErrorKind {
    Unreachable,
    NoReachableProxy,
    UnknownCallee,
    UnknownSession,
    UnknownNode,
    NotSip,
};
using CtlError = Error<ErrorKind>;

enum class EdgeWeight { Hops, Latency };

// Dijkstra over switches. Nodes leave the frontier in (distance, natural id)
// order and a predecessor is only replaced by a strictly shorter route.
std::vector<std::string> shortest_path(const TopologyGraph& g, const std::string& src,
                                       const std::string& dst, EdgeWeight weight = EdgeWeight::Hops);

double path_cost(const TopologyGraph& g, const std::vector<std::string>& path,
                 EdgeWeight weight = EdgeWeight::Hops);

// What came back after the controller pushed a probe out of a port.
struct ProbeReply {
    enum class Kind { Switch, Host };
    Kind kind = Kind::Switch;
    // Switch: the PacketIn raised by the neighbor that received the probe.
    std::string switch_id;
    PortNo in_port = 0;
    std::string payload;
    // Host: its self-announcement.
    std::string host;
    Ipv4 ip;
};

// Controller-side view of the data plane used for discovery.
class DiscoveryFabric {
public:
    virtual ~DiscoveryFabric() = default;
    virtual std::vector<std::string> switches() const = 0;
    virtual std::set<PortNo> ports(const std::string& sw) const = 0;
    virtual std::pair<double, double> port_properties(const std::string& sw, PortNo port) const = 0;
    virtual std::optional<ProbeReply> probe(const std::string& sw, PortNo port, const std::string& payload) = 0;
};

std::string make_lldp_payload(const std::string& chassis, PortNo port);
bool parse_lldp_payload(const std::string& payload, std::string& chassis, PortNo& port);

TopologyGraph discover_topology(DiscoveryFabric& fabric);

}  // namespace opensim::ctl
