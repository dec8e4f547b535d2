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


#include <map>
#include <random>

#include <gtest/gtest.h>

#include "opensim/topology.hpp"
#include "testkit.hpp"

namespace opensim::ctl {
namespace {

// The six-switch testbed with two proxies: S1 reaches P1 through S2-S5 and
// P2 through S4-S6; both meet the callee at S3.
TopologyGraph six_switch_testbed()
{
    TopologyGraph g;
    for (int i = 1; i <= 6; ++i)
        g.add_switch("S" + std::to_string(i));
    g.add_edge({"S1", 1, "S2", 1, 100, 0.1});
    g.add_edge({"S1", 2, "S4", 1, 100, 0.1});
    g.add_edge({"S2", 2, "S5", 1, 100, 0.1});
    g.add_edge({"S4", 2, "S6", 1, 100, 0.1});
    g.add_edge({"S5", 2, "S3", 1, 100, 0.1});
    g.add_edge({"S6", 2, "S3", 2, 100, 0.1});
    g.attach_host({"UAC", Ipv4::parse("10.0.0.1"), "S1", 3});
    g.attach_host({"UAS", Ipv4::parse("10.0.0.2"), "S3", 3});
    g.attach_host({"P1", Ipv4::parse("10.0.1.1"), "S5", 3});
    g.attach_host({"P2", Ipv4::parse("10.0.1.2"), "S6", 3});
    return g;
}

TEST(ShortestPath, TestbedRoutes)
{
    TopologyGraph g = six_switch_testbed();
    EXPECT_EQ(shortest_path(g, "S1", "S5"), (std::vector<std::string>{"S1", "S2", "S5"}));
    EXPECT_EQ(shortest_path(g, "S1", "S6"), (std::vector<std::string>{"S1", "S4", "S6"}));
    EXPECT_EQ(*g.port_toward("S1", "S4"), 2u);
}

TEST(ShortestPath, SameSwitch)
{
    TopologyGraph g = six_switch_testbed();
    EXPECT_EQ(shortest_path(g, "S3", "S3"), std::vector<std::string>{"S3"});
}

TEST(ShortestPath, Unreachable)
{
    TopologyGraph g;
    g.add_switch("S1");
    g.add_switch("S2");
    try {
        shortest_path(g, "S1", "S2");
        FAIL();
    } catch (const CtlError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Unreachable);
    }
}

TEST(ShortestPath, TiesGoToTheLowestNeighbor)
{
    // S1 reaches S4 through S2 or S3 in two hops
    TopologyGraph g;
    for (const char* s : {"S1", "S2", "S3", "S4"})
        g.add_switch(s);
    g.add_edge({"S1", 1, "S3", 1, 1000, 0.1});
    g.add_edge({"S1", 2, "S2", 1, 1000, 0.1});
    g.add_edge({"S3", 2, "S4", 1, 1000, 0.1});
    g.add_edge({"S2", 2, "S4", 2, 1000, 0.1});
    EXPECT_EQ(shortest_path(g, "S1", "S4"), (std::vector<std::string>{"S1", "S2", "S4"}));
}

TEST(ShortestPath, LatencyWeights)
{
    TopologyGraph g;
    for (const char* s : {"S1", "S2", "S3"})
        g.add_switch(s);
    g.add_edge({"S1", 1, "S3", 1, 1000, 10});
    g.add_edge({"S1", 2, "S2", 1, 1000, 1});
    g.add_edge({"S2", 2, "S3", 2, 1000, 1});
    EXPECT_EQ(shortest_path(g, "S1", "S3", EdgeWeight::Hops), (std::vector<std::string>{"S1", "S3"}));
    EXPECT_EQ(shortest_path(g, "S1", "S3", EdgeWeight::Latency), (std::vector<std::string>{"S1", "S2", "S3"}));
    EXPECT_DOUBLE_EQ(path_cost(g, {"S1", "S2", "S3"}, EdgeWeight::Latency), 2);
}

TEST(ShortestPath, EqualsBruteForceEnumeration)
{
    testkit::OracleReport rep = testkit::shortest_path_vs_brute_force(500, 500);
    EXPECT_EQ(rep.trials, 500);
    EXPECT_EQ(rep.mismatches, 0) << rep.first_failure;
}

TEST(ShortestPath, Deterministic)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        testkit::RandomGraph rg = testkit::random_connected_graph(rng, 8, 6);
        TopologyGraph g = rg.build();
        EXPECT_EQ(shortest_path(g, "S1", "S8", EdgeWeight::Hops), shortest_path(g, "S1", "S8", EdgeWeight::Hops));
    }
}

// Answers probes from a known wiring, the way switches would relay LLDP.
class WiredFabric : public DiscoveryFabric {
public:
    struct End {
        std::string sw;
        PortNo port;
    };

    void add_switch(const std::string& sw) { ports_[sw]; }
    void link(End a, End b)
    {
        ports_[a.sw].insert(a.port);
        ports_[b.sw].insert(b.port);
        peer_[{a.sw, a.port}] = b;
        peer_[{b.sw, b.port}] = a;
    }
    void host(End at, const std::string& name, Ipv4 ip)
    {
        ports_[at.sw].insert(at.port);
        hosts_[{at.sw, at.port}] = {name, ip};
    }
    void cut(End a)
    {
        End b = peer_.at({a.sw, a.port});
        peer_.erase({a.sw, a.port});
        peer_.erase({b.sw, b.port});
    }

    std::vector<std::string> switches() const override
    {
        std::vector<std::string> out;
        for (const auto& [sw, p] : ports_)
            out.push_back(sw);
        return out;
    }
    std::set<PortNo> ports(const std::string& sw) const override { return ports_.at(sw); }
    std::pair<double, double> port_properties(const std::string&, PortNo) const override { return {100, 0.5}; }
    std::optional<ProbeReply> probe(const std::string& sw, PortNo port, const std::string& payload) override
    {
        ProbeReply r;
        if (auto h = hosts_.find({sw, port}); h != hosts_.end()) {
            r.kind = ProbeReply::Kind::Host;
            r.host = h->second.first;
            r.ip = h->second.second;
            return r;
        }
        auto p = peer_.find({sw, port});
        if (p == peer_.end())
            return std::nullopt;
        r.kind = ProbeReply::Kind::Switch;
        r.switch_id = p->second.sw;
        r.in_port = p->second.port;
        r.payload = payload;
        return r;
    }

private:
    std::map<std::string, std::set<PortNo>> ports_;
    std::map<std::pair<std::string, PortNo>, End> peer_;
    std::map<std::pair<std::string, PortNo>, std::pair<std::string, Ipv4>> hosts_;
};

std::set<std::pair<std::string, std::string>> normalized(const std::vector<testkit::GraphEdge>& edges)
{
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& e : edges) {
        auto a = testkit::RandomGraph::name(e.a);
        auto b = testkit::RandomGraph::name(e.b);
        out.insert(natural_less(a, b) ? std::make_pair(a, b) : std::make_pair(b, a));
    }
    return out;
}

TEST(Discovery, SixSwitchTestbed)
{
    WiredFabric f;
    TopologyGraph truth = six_switch_testbed();
    for (const auto& sw : truth.switches()) {
        for (const auto& n : truth.neighbors(sw)) {
            if (natural_less(sw, n.node))
                f.link({sw, n.port}, {n.node, *truth.port_toward(n.node, sw)});
        }
    }
    for (const auto& [name, h] : truth.hosts())
        f.host({h.sw, h.port}, name, h.ip);

    TopologyGraph g = discover_topology(f);
    EXPECT_EQ(g.switches().size(), 6u);
    EXPECT_EQ(g.edge_set(), truth.edge_set());
    EXPECT_EQ(g.edge_count(), 6u);
    ASSERT_NE(g.host("P2"), nullptr);
    EXPECT_EQ(g.host("P2")->sw, "S6");
    EXPECT_EQ(g.host_by_ip(Ipv4::parse("10.0.1.1"))->name, "P1");

    f.cut({"S1", 1});  // S1-S2 goes down
    TopologyGraph after = discover_topology(f);
    EXPECT_EQ(after.edge_count(), 5u);
    EXPECT_EQ(after.edge_set().count({"S1", "S2"}), 0u);
}

TEST(Discovery, IsolatedSwitch)
{
    WiredFabric f;
    f.add_switch("S1");
    TopologyGraph g = discover_topology(f);
    EXPECT_EQ(g.switches(), std::vector<std::string>{"S1"});
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Discovery, RandomGraphsMatchGroundTruth)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        testkit::RandomGraph rg = testkit::random_connected_graph(rng, 8, 6);
        WiredFabric f;
        std::map<std::string, PortNo> next;
        for (int i = 0; i < rg.n; ++i)
            f.add_switch(rg.name(i));
        for (const auto& e : rg.edges) {
            auto a = rg.name(e.a);
            auto b = rg.name(e.b);
            f.link({a, ++next[a]}, {b, ++next[b]});
        }
        EXPECT_EQ(discover_topology(f).edge_set(), normalized(rg.edges)) << "trial " << t;
    }
}

TEST(Lldp, RoundTrip)
{
    std::string chassis;
    PortNo port = 0;
    ASSERT_TRUE(parse_lldp_payload(make_lldp_payload("S7", 4), chassis, port));
    EXPECT_EQ(chassis, "S7");
    EXPECT_EQ(port, 4u);
    EXPECT_FALSE(parse_lldp_payload("GET / HTTP/1.1", chassis, port));
}

}  // namespace
}  // namespace opensim::ctl
