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

#include "opensim/topology.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <queue>

#include <fmt/format.h>

namespace opensim::ctl {

void TopologyGraph::add_switch(const std::string& id)
{
    adj_.try_emplace(id);
}

void TopologyGraph::add_edge(const Edge& e)
{
    add_switch(e.a);
    add_switch(e.b);
    auto& na = adj_[e.a];
    for (const auto& x : na) {
        if (x.node == e.b && x.port == e.a_port)
            return;
    }
    na.push_back({e.b, e.a_port, e.delay_ms});
    adj_[e.b].push_back({e.a, e.b_port, e.delay_ms});
    for (auto* list : {&adj_[e.a], &adj_[e.b]}) {
        std::sort(list->begin(), list->end(), [](const Adjacent& x, const Adjacent& y) {
            if (x.node != y.node)
                return natural_less(x.node, y.node);
            return x.port < y.port;
        });
    }
}

void TopologyGraph::remove_edge(const std::string& a, const std::string& b)
{
    auto drop = [](std::vector<Adjacent>& v, const std::string& n) {
        v.erase(std::remove_if(v.begin(), v.end(), [&](const Adjacent& x) { return x.node == n; }), v.end());
    };
    if (auto it = adj_.find(a); it != adj_.end())
        drop(it->second, b);
    if (auto it = adj_.find(b); it != adj_.end())
        drop(it->second, a);
}

void TopologyGraph::attach_host(const HostAttachment& h)
{
    add_switch(h.sw);
    if (auto it = hosts_.find(h.name); it != hosts_.end())
        host_ip_.erase(it->second.ip.value());
    hosts_[h.name] = h;
    host_ip_[h.ip.value()] = h.name;
}

std::vector<std::string> TopologyGraph::switches() const
{
    std::vector<std::string> out;
    for (const auto& [id, _] : adj_)
        out.push_back(id);
    return out;
}

const std::vector<Adjacent>& TopologyGraph::neighbors(const std::string& id) const
{
    auto it = adj_.find(id);
    if (it == adj_.end())
        throw CtlError(ErrorKind::UnknownNode, "unknown switch " + id);
    return it->second;
}

std::optional<PortNo> TopologyGraph::port_toward(const std::string& from, const std::string& to) const
{
    for (const auto& n : neighbors(from)) {
        if (n.node == to)
            return n.port;
    }
    return std::nullopt;
}

const HostAttachment* TopologyGraph::host(const std::string& name) const
{
    auto it = hosts_.find(name);
    return it == hosts_.end() ? nullptr : &it->second;
}

const HostAttachment* TopologyGraph::host_by_ip(Ipv4 ip) const
{
    auto it = host_ip_.find(ip.value());
    return it == host_ip_.end() ? nullptr : host(it->second);
}

std::set<std::pair<std::string, std::string>> TopologyGraph::edge_set() const
{
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& [id, list] : adj_) {
        for (const auto& n : list) {
            if (natural_less(id, n.node))
                out.emplace(id, n.node);
            else
                out.emplace(n.node, id);
        }
    }
    return out;
}

namespace {

double weight_of(const Adjacent& a, EdgeWeight w)
{
    return w == EdgeWeight::Hops ? 1.0 : std::max(a.delay_ms, 1e-6);
}

}  // namespace

std::vector<std::string> shortest_path(const TopologyGraph& g, const std::string& src,
                                       const std::string& dst, EdgeWeight weight)
{
    if (!g.has_switch(src) || !g.has_switch(dst))
        throw CtlError(ErrorKind::Unreachable, fmt::format("no route {} -> {}: unknown switch", src, dst));
    if (src == dst)
        return {src};

    struct Item {
        double dist;
        std::string node;
    };
    auto cmp = [](const Item& x, const Item& y) {
        if (x.dist != y.dist)
            return x.dist > y.dist;
        return natural_less(y.node, x.node);
    };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> frontier(cmp);
    std::map<std::string, double> dist;
    std::map<std::string, std::string> pred;
    std::set<std::string> done;
    dist[src] = 0;
    frontier.push({0, src});
    while (!frontier.empty()) {
        Item it = frontier.top();
        frontier.pop();
        if (!done.insert(it.node).second)
            continue;
        if (it.node == dst)
            break;
        for (const auto& n : g.neighbors(it.node)) {
            if (done.count(n.node))
                continue;
            double nd = it.dist + weight_of(n, weight);
            auto d = dist.find(n.node);
            if (d == dist.end() || nd < d->second) {
                dist[n.node] = nd;
                pred[n.node] = it.node;
                frontier.push({nd, n.node});
            }
        }
    }
    if (!done.count(dst))
        throw CtlError(ErrorKind::Unreachable, fmt::format("no route {} -> {}", src, dst));
    std::vector<std::string> path{dst};
    while (path.back() != src)
        path.push_back(pred.at(path.back()));
    std::reverse(path.begin(), path.end());
    return path;
}

double path_cost(const TopologyGraph& g, const std::vector<std::string>& path, EdgeWeight weight)
{
    double c = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& n : g.neighbors(path[i])) {
            if (n.node == path[i + 1])
                best = std::min(best, weight_of(n, weight));
        }
        c += best;
    }
    return c;
}

std::string make_lldp_payload(const std::string& chassis, PortNo port)
{
    return fmt::format("LLDP chassis={} port={}", chassis, port);
}

bool parse_lldp_payload(const std::string& payload, std::string& chassis, PortNo& port)
{
    constexpr std::string_view kHead = "LLDP chassis=";
    if (payload.rfind(kHead, 0) != 0)
        return false;
    auto sp = payload.find(" port=", kHead.size());
    if (sp == std::string::npos)
        return false;
    chassis = payload.substr(kHead.size(), sp - kHead.size());
    const char* b = payload.data() + sp + 6;
    const char* e = payload.data() + payload.size();
    auto [p, ec] = std::from_chars(b, e, port);
    return ec == std::errc{} && p == e;
}

TopologyGraph discover_topology(DiscoveryFabric& fabric)
{
    TopologyGraph g;
    for (const auto& sw : fabric.switches())
        g.add_switch(sw);
    for (const auto& sw : fabric.switches()) {
        for (PortNo port : fabric.ports(sw)) {
            auto reply = fabric.probe(sw, port, make_lldp_payload(sw, port));
            if (!reply)
                continue;
            auto [mbps, delay] = fabric.port_properties(sw, port);
            if (reply->kind == ProbeReply::Kind::Host) {
                g.attach_host({reply->host, reply->ip, sw, port});
                continue;
            }
            std::string chassis;
            PortNo origin = 0;
            if (!parse_lldp_payload(reply->payload, chassis, origin) || chassis != sw || origin != port)
                continue;
            if (!g.has_switch(reply->switch_id))
                continue;  // neighbor not under our control
            g.add_edge({sw, port, reply->switch_id, reply->in_port, mbps, delay});
        }
    }
    return g;
}

}  // namespace opensim::ctl
