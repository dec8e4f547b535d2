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


#include <gtest/gtest.h>

#include "opensim/proxy.hpp"

namespace opensim::proxy {
namespace {

const Ipv4 kCaller = Ipv4::parse("10.0.0.1");
const Ipv4 kCallee = Ipv4::parse("10.0.0.2");

ProxyConfig config(double capacity, double background = 0)
{
    ProxyConfig cfg;
    cfg.id = "P1";
    cfg.ip = Ipv4::parse("10.0.1.1");
    cfg.capacity_cps = capacity;
    cfg.background_pps = background;
    cfg.default_route = kCallee;
    return cfg;
}

sip::Message invite(const std::string& call_id)
{
    auto m = sip::make_request(sip::Method::Invite, "sip:UAS@x", call_id, 1);
    m.via.push_back(sip::HostPort{"10.0.0.1", 5060});
    m.from = sip::NameAddr{"sip:UAC@x", "a"};
    m.to = sip::NameAddr{"sip:UAS@x", ""};
    return m;
}

TEST(ResourceModel, IdleIsZero)
{
    ResourceModel r(1000, 7.75, 1.0, 0.1, 100);
    EXPECT_EQ(r.tick(seconds(5), 0), 0);
}

TEST(ResourceModel, CapacityRateIsFullCpu)
{
    ResourceModel r(1000, 7.75, 1.0, 0.1, 100);
    // 1000 calls/s worth of weighted work over two seconds
    for (int i = 0; i < 2000; ++i)
        r.charge(7.75, millis(i));
    EXPECT_NEAR(r.tick(seconds(2), 0), 100, 1e-9);
    EXPECT_NEAR(r.tick(seconds(2), 500), 100, 1e-9);  // capped
}

TEST(ResourceModel, BackgroundTerm)
{
    ResourceModel r(2500, 7.75, 1.0, 0.1, 100);
    for (int i = 0; i < 2000; ++i)
        r.charge(7.75, millis(i) / 2);  // 2000 calls/s for one second
    EXPECT_NEAR(r.tick(seconds(1), 500), 100.0 * (500 + 2000) / 2500, 1e-9);
}

TEST(ResourceModel, CpuGrowsWithOfferedRate)
{
    double last = -1;
    for (int rate = 0; rate <= 1200; rate += 50) {
        ResourceModel r(1000, 7.75, 1.0, 0.1, 100);
        for (int i = 0; i < rate * 2; ++i)
            r.charge(7.75, seconds(2.0 * i / (rate * 2)));
        double cpu = r.tick(seconds(2), 200);
        EXPECT_GE(cpu, last) << rate;
        EXPECT_LE(cpu, 100);
        last = cpu;
    }
}

TEST(ResourceModel, AdmissionStopsAtCapacity)
{
    ResourceModel r(100, 7.75, 1.0, 0.1, 100);
    int admitted = 0;
    for (int i = 0; i < 200; ++i)
        admitted += r.admit(millis(i), 50);
    EXPECT_EQ(admitted, 50);  // 50 of the 100 cps go to background
    EXPECT_TRUE(r.admit(seconds(1.5), 50));  // the window has moved on
}

TEST(ResourceModel, DelayInflation)
{
    EXPECT_DOUBLE_EQ(inflation(0, 100), 1);
    EXPECT_DOUBLE_EQ(inflation(50, 100), 2);
    EXPECT_DOUBLE_EQ(inflation(99.5, 100), 100);
    EXPECT_DOUBLE_EQ(inflation(100, 100), 100);
}

TEST(Proxy, InviteAtSaturationIsRejected)
{
    Proxy p(config(10));
    for (int i = 0; i < 10; ++i)
        EXPECT_EQ(p.process_message(invite("c" + std::to_string(i)), kCaller, millis(i)).kind,
                  ProxyOutcome::Kind::Forwarded);
    ProxyOutcome oc = p.process_message(invite("c10"), kCaller, millis(10));
    ASSERT_EQ(oc.kind, ProxyOutcome::Kind::Rejected);
    ASSERT_EQ(oc.out.size(), 1u);
    EXPECT_EQ(oc.out[0].msg.status().code, 503);
    EXPECT_EQ(oc.out[0].dst, kCaller);
    EXPECT_EQ(p.totals().rejected, 1u);
}

TEST(Proxy, InviteBelowSaturationIsForwarded)
{
    Proxy p(config(1000, 400));  // 40% busy with background
    p.register_binding("sip:UAS@x", kCallee);
    ProxyOutcome oc = p.process_message(invite("X"), kCaller, 0);
    ASSERT_EQ(oc.kind, ProxyOutcome::Kind::Forwarded);
    ASSERT_EQ(oc.out.size(), 2u);
    EXPECT_EQ(oc.out[0].msg.status().code, 100);
    EXPECT_EQ(oc.out[0].dst, kCaller);
    const auto& fwd = oc.out[1].msg;
    EXPECT_EQ(oc.out[1].dst, kCallee);
    EXPECT_EQ(fwd.record_route, std::vector<std::string>{"P1"});
    ASSERT_EQ(fwd.via.size(), 2u);
    EXPECT_EQ(fwd.via.front().host, "10.0.1.1");
}

TEST(Proxy, DownProxyRaises)
{
    Proxy p(config(1000));
    p.set_availability(false, 0);
    try {
        p.process_message(invite("X"), kCaller, 0);
        FAIL();
    } catch (const ProxyError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ProxyDown);
    }
    EXPECT_EQ(p.background(), 0);
}

// Runs one call through the proxy; returns the hop each message went to.
std::vector<Ipv4> one_call(Proxy& p, const std::string& cid, SimTime t0)
{
    std::vector<Ipv4> hops;
    auto oc = p.process_message(invite(cid), kCaller, t0);
    const sip::Message fwd_invite = oc.out.at(1).msg;
    hops.push_back(oc.out.at(1).dst);
    for (int code : {180, 200}) {
        auto r = p.process_message(sip::make_response(fwd_invite, sip::StatusCode(code)), kCallee, t0 + code);
        EXPECT_EQ(r.out.at(0).msg.via.front().host, "10.0.0.1");
        hops.push_back(r.out.at(0).dst);
    }
    auto ack = sip::make_request(sip::Method::Ack, "sip:UAS@x", cid, 1);
    ack.via.push_back(sip::HostPort{"10.0.0.1", 5060});
    auto a = p.process_message(ack, kCaller, t0 + 300);
    EXPECT_TRUE(a.out.at(0).msg.record_route.empty());  // only the Invite is stamped
    hops.push_back(a.out.at(0).dst);
    auto bye = sip::make_request(sip::Method::Bye, "sip:UAS@x", cid, 2);
    bye.via.push_back(sip::HostPort{"10.0.0.1", 5060});
    auto b = p.process_message(bye, kCaller, t0 + 400);
    hops.push_back(b.out.at(0).dst);
    auto ok = p.process_message(sip::make_response(b.out.at(0).msg, sip::StatusCode(200)), kCallee, t0 + 500);
    hops.push_back(ok.out.at(0).dst);
    return hops;
}

TEST(Proxy, SevenMessagesPerCall)
{
    Proxy p(config(1000));
    auto hops = one_call(p, "X", 0);
    EXPECT_EQ(hops, (std::vector<Ipv4>{kCallee, kCaller, kCaller, kCallee, kCallee, kCaller}));
    EXPECT_EQ(p.totals().processed, 7u);
    EXPECT_EQ(p.totals().completed, 1u);
    EXPECT_EQ(p.dialogs(), 0u);
    EXPECT_EQ(p.active_transactions(), 0u);
}

TEST(Proxy, CompletedPlusRejectedEqualsOffered)
{
    Proxy p(config(50));
    int offered = 0;
    for (int i = 0; i < 200; ++i) {
        SimTime t = millis(i * 5);
        ++offered;
        auto oc = p.process_message(invite("c" + std::to_string(i)), kCaller, t);
        if (oc.kind == ProxyOutcome::Kind::Rejected)
            continue;
        p.process_message(invite("c" + std::to_string(i)), kCaller, t);  // retransmission is absorbed
        const sip::Message fwd = oc.out.at(1).msg;
        p.process_message(sip::make_response(fwd, sip::StatusCode(200)), kCallee, t + 1);
        auto bye = sip::make_request(sip::Method::Bye, "sip:UAS@x", "c" + std::to_string(i), 2);
        bye.via.push_back(sip::HostPort{"10.0.0.1", 5060});
        auto b = p.process_message(bye, kCaller, t + 2);
        p.process_message(sip::make_response(b.out.at(0).msg, sip::StatusCode(200)), kCallee, t + 3);
    }
    EXPECT_EQ(p.totals().completed + p.totals().rejected, static_cast<std::uint64_t>(offered));
    EXPECT_GT(p.totals().rejected, 0u);
}

TEST(Proxy, FailureDropsOpenDialogs)
{
    Proxy p(config(1000));
    p.process_message(invite("A"), kCaller, 0);
    p.process_message(invite("B"), kCaller, 0);
    p.set_availability(false, seconds(1));
    EXPECT_EQ(p.totals().dropped_on_failure, 2u);
    EXPECT_EQ(p.dialogs(), 0u);
    p.set_availability(true, seconds(2));
    EXPECT_TRUE(p.available());
    EXPECT_EQ(p.active_transactions(), 0u);
}

TEST(Proxy, IdleFailRecoverChangesNothingElse)
{
    Proxy p(config(1000, 500));
    p.resource_tick(seconds(1));
    double cpu = p.cpu();
    double mem = p.mem();
    p.set_availability(false, seconds(2));
    p.set_availability(true, seconds(3));
    p.resource_tick(seconds(4));
    EXPECT_DOUBLE_EQ(p.cpu(), cpu);
    EXPECT_DOUBLE_EQ(p.mem(), mem);
    EXPECT_EQ(p.totals().processed, 0u);
}

}  // namespace
}  // namespace opensim::proxy
