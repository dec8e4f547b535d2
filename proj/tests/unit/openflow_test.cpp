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


#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "opensim/openflow.hpp"
#include "testkit.hpp"

namespace opensim::of {
namespace {

Packet sip_packet(const sip::Message& m, Ipv4 src, Ipv4 dst)
{
    Packet p;
    p.ip_src = src;
    p.ip_dst = dst;
    p.sip = std::make_shared<const sip::Message>(m);
    return p;
}

Packet invite_packet(const std::string& call_id)
{
    auto m = sip::make_request(sip::Method::Invite, "sip:bob@b", call_id, 1);
    m.via.push_back(sip::HostPort{"10.0.0.1", 5060});
    return sip_packet(m, Ipv4::parse("10.0.0.1"), Ipv4::parse("10.0.0.100"));
}

FlowRule call_rule(std::uint64_t cookie, const std::string& call_id, PortNo out, int priority = 100)
{
    FlowRule r;
    r.cookie = cookie;
    r.priority = priority;
    r.match.application = "SIP";
    r.match.call_id = call_id;
    r.action = ForwardTo{{out}};
    return r;
}

FlowMod add(const std::string& sw, FlowRule r)
{
    FlowMod m;
    m.switch_id = sw;
    m.rule = std::move(r);
    return m;
}

FlowMod remove(const std::string& sw, std::uint64_t cookie)
{
    FlowMod m;
    m.switch_id = sw;
    m.command = FlowMod::Command::Remove;
    m.rule.cookie = cookie;
    return m;
}

TEST(FlowTable, EmptyTableMisses)
{
    FlowTable t;
    Packet p = invite_packet("X");
    EXPECT_EQ(t.lookup(PacketView::of(1, p)), nullptr);
}

TEST(FlowTable, CallIdRuleMatches)
{
    FlowTable t;
    t.add(call_rule(7, "X", 3));
    Packet x = invite_packet("X");
    Packet y = invite_packet("Y");
    ASSERT_NE(t.lookup(PacketView::of(1, x)), nullptr);
    EXPECT_EQ(t.lookup(PacketView::of(1, x))->cookie, 7u);
    EXPECT_EQ(t.lookup(PacketView::of(1, y)), nullptr);
}

TEST(FlowTable, RejectsAllWildcardAndDuplicates)
{
    FlowTable t;
    FlowRule any;
    any.cookie = 1;
    EXPECT_THROW(t.add(any), OfError);
    t.add(call_rule(2, "X", 1));
    try {
        t.add(call_rule(2, "Y", 1));
        FAIL();
    } catch (const OfError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicateCookie);
    }
}

TEST(FlowTable, OrderedByPriorityThenInstall)
{
    FlowTable t;
    t.add(call_rule(1, "A", 1, 5));
    t.add(call_rule(2, "B", 1, 9));
    t.add(call_rule(3, "C", 1, 5));
    auto rules = t.ordered();
    ASSERT_EQ(rules.size(), 3u);
    EXPECT_EQ(rules[0]->cookie, 2u);
    EXPECT_EQ(rules[1]->cookie, 1u);
    EXPECT_EQ(rules[2]->cookie, 3u);
    EXPECT_LT(rules[1]->install_seq, rules[2]->install_seq);
}

TEST(FlowTable, LookupEqualsLinearScan)
{
    testkit::OracleReport rep = testkit::flow_lookup_vs_linear_scan(2026, 1000);
    EXPECT_EQ(rep.trials, 1000);
    EXPECT_EQ(rep.mismatches, 0) << rep.first_failure;
}

TEST(Switch, MissGoesToController)
{
    Switch s("S1", {1, 2, 3});
    ForwardDecision d = s.process_packet(1, invite_packet("X"), 0);
    EXPECT_EQ(d.kind, ForwardDecision::Kind::ToController);
    EXPECT_EQ(s.counters().packet_ins, 1u);
}

TEST(Switch, MissWithoutControllerDrops)
{
    Switch s("S1", {1, 2});
    s.set_miss_to_controller(false);
    EXPECT_EQ(s.process_packet(1, invite_packet("X"), 0).kind, ForwardDecision::Kind::Drop);
    EXPECT_EQ(s.counters().drops, 1u);
}

TEST(Switch, UnknownPort)
{
    Switch s("S1", {1, 2});
    try {
        s.process_packet(9, invite_packet("X"), 0);
        FAIL();
    } catch (const OfError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownPort);
    }
}

TEST(Switch, HitEmitsAndCounts)
{
    Switch s("S1", {1, 2, 3});
    s.apply_flow_mod(add("S1", call_rule(5, "X", 3)));
    ForwardDecision d = s.process_packet(1, invite_packet("X"), 0);
    ASSERT_EQ(d.kind, ForwardDecision::Kind::Emit);
    ASSERT_EQ(d.ports.size(), 1u);
    EXPECT_EQ(d.ports[0], 3u);
    EXPECT_EQ(d.cookie, 5u);
    EXPECT_EQ(s.collect_stats().at(5).matched_packets, 1u);
}

TEST(Switch, AddThenRemove)
{
    Switch s("S1", {1, 2});
    s.apply_flow_mod(add("S1", call_rule(5, "X", 2)));
    EXPECT_EQ(s.table().size(), 1u);
    s.apply_flow_mod(remove("S1", 5));
    EXPECT_EQ(s.table().size(), 0u);
    try {
        s.apply_flow_mod(remove("S1", 5));
        FAIL();
    } catch (const OfError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RemoveNonexistentRule);
    }
}

TEST(Switch, RemovedCallRuleMisses)
{
    Switch s("S1", {1, 2});
    s.apply_flow_mod(add("S1", call_rule(5, "X", 2)));
    EXPECT_EQ(s.process_packet(1, invite_packet("X"), 0).kind, ForwardDecision::Kind::Emit);
    s.apply_flow_mod(remove("S1", 5));
    EXPECT_EQ(s.process_packet(1, invite_packet("X"), 0).kind, ForwardDecision::Kind::ToController);
}

TEST(Switch, FreshCountersAreZero)
{
    Switch s("S1", {1, 2});
    s.apply_flow_mod(add("S1", call_rule(5, "X", 2)));
    EXPECT_EQ(s.collect_stats().at(5), RuleStats{});
    EXPECT_EQ(s.counters().offered, 0u);
    EXPECT_EQ(s.port_counters(1).rx_packets, 0u);
}

TEST(Switch, SevenMessagesOneRuleAfterThePacketIn)
{
    Switch s("S1", {1, 2});
    auto flow = sip::canonical_call_flow("X");
    std::uint64_t packet_ins = 0;
    for (std::size_t i = 0; i < flow.size(); ++i) {
        if (i == 1)  // the controller answered the first miss
            s.apply_flow_mod(add("S1", call_rule(5, "X", 2)));
        auto d = s.process_packet(1, sip_packet(flow[i], Ipv4::parse("10.0.0.1"), Ipv4::parse("10.0.0.2")),
                                  static_cast<SimTime>(i));
        if (d.kind == ForwardDecision::Kind::ToController)
            ++packet_ins;
    }
    EXPECT_EQ(packet_ins, 1u);
    EXPECT_EQ(s.collect_stats().at(5).matched_packets, 6u);
    // replaying all seven through the installed rule
    Switch t("S1", {1, 2});
    t.apply_flow_mod(add("S1", call_rule(5, "X", 2)));
    for (const auto& m : flow)
        t.process_packet(1, sip_packet(m, Ipv4::parse("10.0.0.1"), Ipv4::parse("10.0.0.2")), 0);
    EXPECT_EQ(t.collect_stats().at(5).matched_packets, 7u);
    EXPECT_EQ(t.take_ended_dialogs(), std::vector<std::string>{"X"});
}

// Matched packets per rule, PacketIns and drops, tallied independently of the
// switch, must agree with its counters, and they must add up to what was offered.
TEST(Switch, CountersEqualIndependentTally)
{
    std::mt19937_64 rng(99);
    Switch s("S1", {1, 2, 3});
    std::vector<FlowRule> installed;
    std::map<std::uint64_t, std::uint64_t> tally;
    std::uint64_t packet_ins = 0;
    const std::string calls[] = {"a", "b", "c", "d"};
    for (std::uint64_t c = 1; c <= 3; ++c) {
        FlowRule r = call_rule(c, calls[c - 1], 2, static_cast<int>(c % 2));
        installed.push_back(r);
        s.apply_flow_mod(add("S1", r));
    }
    FlowRule drop;
    drop.cookie = 9;
    drop.match.in_port = 3;
    drop.action = Drop{};
    installed.push_back(drop);
    s.apply_flow_mod(add("S1", drop));

    std::uint64_t offered = 0;
    for (int i = 0; i < 2000; ++i) {
        PortNo in = static_cast<PortNo>(1 + rng() % 3);
        Packet p = invite_packet(calls[rng() % 4]);
        auto want = testkit::linear_scan(installed, in, p);
        if (want)
            ++tally[*want];
        else
            ++packet_ins;
        s.process_packet(in, p, i);
        ++offered;
    }
    std::uint64_t matched = 0;
    for (const auto& [cookie, st] : s.collect_stats()) {
        EXPECT_EQ(st.matched_packets, tally[cookie]) << cookie;
        matched += st.matched_packets;
    }
    EXPECT_EQ(s.counters().packet_ins, packet_ins);
    EXPECT_EQ(matched + s.counters().packet_ins + s.counters().drops, s.counters().offered);
    EXPECT_EQ(s.counters().offered, offered);
}

TEST(Switch, IdenticalInputsIdenticalOutputs)
{
    auto run = [] {
        Switch s("S1", {1, 2});
        s.apply_flow_mod(add("S1", call_rule(1, "a", 2)));
        std::vector<std::pair<int, std::uint64_t>> out;
        for (int i = 0; i < 50; ++i) {
            auto d = s.process_packet(1, invite_packet(i % 3 ? "a" : "b"), i);
            out.emplace_back(static_cast<int>(d.kind), d.cookie);
        }
        return std::make_pair(out, s.collect_stats());
    };
    EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace opensim::of
