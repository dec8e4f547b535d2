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

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "opensim/engine.hpp"

namespace opensim::sim {
namespace {

// Records (time, arg) of every event it receives.
struct Recorder : Entity {
    std::vector<std::pair<SimTime, std::uint64_t>> seen;
    void on_event(Engine& engine, const Event& ev) override { seen.emplace_back(engine.now(), ev.arg); }
};

struct Ticker : Entity {
    int fired = 0;
    void on_event(Engine& engine, const Event&) override
    {
        ++fired;
        engine.schedule_in(seconds(1.0), *engine.find_entity("tick"), kUser);
    }
};

TEST(Engine, SameTimeEventsFireInScheduleOrder)
{
    Engine e;
    Recorder r;
    EntityId id = e.add_entity("r", &r);
    e.schedule(seconds(1.0), id, kUser, 1);
    e.schedule(seconds(1.0), id, kUser, 2);
    e.run_until(seconds(2.0));
    ASSERT_EQ(r.seen.size(), 2u);
    EXPECT_EQ(r.seen[0].second, 1u);
    EXPECT_EQ(r.seen[1].second, 2u);
}

TEST(Engine, PastEventRejected)
{
    Engine e;
    Recorder r;
    EntityId id = e.add_entity("r", &r);
    e.run_until(seconds(5.0));
    try {
        e.schedule(seconds(4.0), id, kUser);
        FAIL();
    } catch (const SimError& err) {
        EXPECT_EQ(err.kind(), ErrorKind::PastEvent);
    }
    EXPECT_THROW(e.run_until(seconds(1.0)), SimError);
    EXPECT_THROW(e.schedule(seconds(6.0), 7, kUser), SimError);
}

TEST(Engine, EmptyQueueAdvancesClock)
{
    Engine e;
    RunStats s = e.run_until(seconds(3.0));
    EXPECT_EQ(s.events, 0u);
    EXPECT_EQ(e.now(), seconds(3.0));
}

TEST(Engine, RandomEventsMatchStableSort)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<SimTime> when(0, 5000);
    Engine e;
    Recorder r;
    EntityId id = e.add_entity("r", &r);
    std::vector<std::pair<SimTime, std::uint64_t>> expected;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        SimTime t = when(rng);
        e.schedule(t, id, kUser, i);
        expected.emplace_back(t, i);
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    RunStats s = e.run_until(5000);
    EXPECT_EQ(s.events, 100000u);
    EXPECT_EQ(r.seen, expected);
}

TEST(Engine, ClockNeverGoesBackwards)
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<SimTime> when(0, 1000);
    Engine e;
    Recorder r;
    EntityId id = e.add_entity("r", &r);
    for (int i = 0; i < 2000; ++i)
        e.schedule(when(rng), id, kUser);
    for (SimTime t = 100; t <= 1000; t += 100)
        e.run_until(t);
    for (std::size_t i = 1; i < r.seen.size(); ++i)
        ASSERT_LE(r.seen[i - 1].first, r.seen[i].first);
    EXPECT_EQ(e.pending(), 0u);
}

TEST(Engine, PeriodicTimer)
{
    Engine e;
    Ticker t;
    EntityId id = e.add_entity("tick", &t);
    e.schedule(seconds(1.0), id, kUser);
    e.run_until(seconds(100.0));
    EXPECT_EQ(t.fired, 100);
}

TEST(Engine, FailureInjection)
{
    Engine e;
    Recorder r;
    e.add_entity("P1", &r);
    try {
        inject_failure(e, {{"P9", 20, 50}});
        FAIL();
    } catch (const SimError& err) {
        EXPECT_EQ(err.kind(), ErrorKind::UnknownEntity);
    }
    EXPECT_THROW(inject_failure(e, {{"P1", 50, 20}}), SimError);
    EXPECT_EQ(e.pending(), 0u);
    inject_failure(e, {{"P1", 20, 50}});
    e.run_until(seconds(60.0));
    ASSERT_EQ(r.seen.size(), 2u);
    EXPECT_EQ(r.seen[0].first, seconds(20.0));
    EXPECT_EQ(r.seen[1].first, seconds(50.0));
}

TEST(Arrivals, DeterministicCount)
{
    ArrivalStream s({{{0, 100, 1500}}, ArrivalProcess::Deterministic}, 1);
    std::uint64_t n = 0;
    SimTime prev = -1;
    while (auto t = s.next()) {
        ASSERT_GT(*t, prev);
        ASSERT_LT(*t, seconds(100.0));
        prev = *t;
        ++n;
    }
    EXPECT_EQ(n, 150000u);
}

TEST(Arrivals, StepProfileCounts)
{
    ArrivalStream s({{{0, 10, 100}, {10, 20, 0}, {20, 30, 250}}, ArrivalProcess::Deterministic}, 1);
    std::uint64_t first = 0, gap = 0, last = 0;
    while (auto t = s.next()) {
        if (*t < seconds(10.0))
            ++first;
        else if (*t < seconds(20.0))
            ++gap;
        else
            ++last;
    }
    EXPECT_EQ(first, 1000u);
    EXPECT_EQ(gap, 0u);
    EXPECT_EQ(last, 2500u);
}

TEST(Arrivals, PoissonWithinThreeSigma)
{
    ArrivalStream s({{{0, 100, 1000}}, ArrivalProcess::Poisson}, 99);
    double n = 0;
    while (s.next())
        ++n;
    EXPECT_NEAR(n, 100000.0, 3 * std::sqrt(100000.0));
}

TEST(Arrivals, SeedDeterminism)
{
    auto draw = [](std::uint64_t seed) {
        ArrivalStream s({{{0, 5, 200}}, ArrivalProcess::Poisson}, seed);
        std::vector<SimTime> v;
        while (auto t = s.next())
            v.push_back(*t);
        return v;
    };
    EXPECT_EQ(draw(5), draw(5));
    EXPECT_NE(draw(5), draw(6));
}

TEST(LoadProfile, Validation)
{
    auto kind_of = [](const LoadProfile& p) {
        try {
            p.validate();
        } catch (const SimError& e) {
            return e.kind();
        }
        return ErrorKind::UnknownEntity;  // sentinel: no throw
    };
    EXPECT_EQ(kind_of({{{0, 10, 100}, {12, 20, 100}}}), ErrorKind::InvalidProfile);
    EXPECT_EQ(kind_of({{{5, 5, 100}}}), ErrorKind::InvalidProfile);
    EXPECT_EQ(kind_of({{{0, 5, -1}}}), ErrorKind::InvalidProfile);
    EXPECT_NO_THROW((LoadProfile{{{0, 10, 100}, {10, 20, 50}}}.validate()));
    EXPECT_DOUBLE_EQ((LoadProfile{{{0, 10, 100}, {10, 20, 50}}}.expected_calls()), 1500.0);
}

TEST(Link, SerializationAndPropagation)
{
    // 100 Mbps moves 12.5 bytes per microsecond.
    Link l(100, 1.0);
    EXPECT_EQ(l.transmit(0, 0, 1250), 100 + 1000);
    // queued behind the first packet
    EXPECT_EQ(l.transmit(0, 0, 1250), 200 + 1000);
    // the other direction has its own transmitter
    EXPECT_EQ(l.transmit(1, 0, 1250), 100 + 1000);
}

TEST(Link, ArrivalsPreserveOrder)
{
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::uint32_t> size(64, 1500);
    Link l(10, 0.5);
    SimTime now = 0, prev = 0;
    for (int i = 0; i < 5000; ++i) {
        now += static_cast<SimTime>(rng() % 300);
        SimTime at = l.transmit(0, now, size(rng));
        ASSERT_GT(at, prev);
        prev = at;
    }
}

TEST(Link, BackgroundTakesBandwidth)
{
    Link l(100, 0);
    l.set_background(0, 6.25e6);  // half the line
    EXPECT_EQ(l.transmit(0, 0, 1250), 200);
    EXPECT_NEAR(l.utilization(0, 0), 50.0 + 100.0 * 1250 / 12.5e6, 1e-9);
}

TEST(Link, UtilizationNeverExceedsCapacity)
{
    Link l(10, 0);
    for (int i = 0; i < 20000; ++i)
        l.transmit(0, 0, 1000);  // 20 MB offered at once on a 1.25 MB/s line
    for (std::size_t k = 0; k < 20; ++k)
        EXPECT_LE(l.utilization(0, k), 100.0 + 1e-6);
    EXPECT_NEAR(l.utilization(0, 3), 100.0, 1e-6);
}

}  // namespace
}  // namespace opensim::sim
