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

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opensim/common.hpp"

namespace opensim::sim {

using EntityId = std::uint32_t;

// Event kinds shared by all entities; entities define their own above kUser.
enum : std::uint32_t {
    kFail = 1,
    kRecover = 2,
    kUser = 16,
};

struct Event {
    SimTime time = 0;
    std::uint64_t seq = 0;
    EntityId target = 0;
    std::uint32_t kind = 0;
    std::uint64_t arg = 0;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const
    {
        return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
};

// Min-heap by (time, seq).
class EventQueue {
public:
    void push(const Event& e);
    Event pop();
    const Event& top() const { return heap_.front(); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    void reserve(std::size_t n) { heap_.reserve(n); }

private:
    std::vector<Event> heap_;
};

enum class ErrorKind { PastEvent, UnknownEntity, InvalidProfile, InvalidSchedule };
using SimError = Error<ErrorKind>;

class Engine;

class Entity {
public:
    virtual ~Entity() = default;
    virtual void on_event(Engine& engine, const Event& ev) = 0;
};

struct RunStats {
    std::uint64_t events = 0;
    SimTime clock = 0;
};

class Engine {
public:
    SimTime now() const { return now_; }

    EntityId add_entity(std::string name, Entity* entity);
    std::optional<EntityId> find_entity(std::string_view name) const;
    const std::string& entity_name(EntityId id) const { return names_[id]; }
    std::size_t entity_count() const { return entities_.size(); }

    std::uint64_t schedule(SimTime at, EntityId target, std::uint32_t kind, std::uint64_t arg = 0);
    std::uint64_t schedule_in(SimTime delay, EntityId target, std::uint32_t kind, std::uint64_t arg = 0)
    {
        return schedule(now_ + delay, target, kind, arg);
    }

    // Fires every event with time <= t, then sets the clock to t.
    RunStats run_until(SimTime t);
    std::size_t pending() const { return queue_.size(); }

    void set_trace(std::ostream* out) { trace_ = out; }
    bool tracing() const { return trace_ != nullptr; }
    void trace(std::string_view entity, std::string_view kind, std::string_view summary);

private:
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t fired_ = 0;
    EventQueue queue_;
    std::vector<Entity*> entities_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, EntityId> by_name_;
    std::ostream* trace_ = nullptr;
};

// Point-to-point full-duplex link. Each direction is a FIFO transmitter.
class Link {
public:
    Link(double mbps, double delay_ms, SimTime interval = kMicrosPerSecond);

    // Returns the arrival time at the far end for a packet handed to the
    // transmitter at `now`.
    SimTime transmit(int dir, SimTime now, std::uint32_t bytes);
    // Constant-rate background traffic; it takes a share of the bandwidth.
    void set_background(int dir, double bytes_per_s) { background_[dir] = bytes_per_s; }
    double background(int dir) const { return background_[dir]; }

    // Bytes on the wire during interval k, background included.
    double interval_bytes(int dir, std::size_t k) const;
    double utilization(int dir, std::size_t k) const;
    double capacity_bytes_per_interval() const;

    double mbps() const { return mbps_; }
    SimTime propagation() const { return propagation_; }

private:
    void account(int dir, SimTime start, SimTime end, double bytes);

    double mbps_;
    SimTime propagation_;
    SimTime interval_;
    SimTime next_free_[2] = {0, 0};
    double background_[2] = {0, 0};
    std::vector<double> bytes_[2];
};

struct Segment {
    double start_s = 0;
    double end_s = 0;
    double rate_cps = 0;
};

enum class ArrivalProcess { Deterministic, Poisson };

struct LoadProfile {
    std::vector<Segment> segments;
    ArrivalProcess process = ArrivalProcess::Deterministic;

    void validate() const;
    double end_s() const { return segments.empty() ? 0 : segments.back().end_s; }
    // Expected number of call starts.
    double expected_calls() const;
};

// Lazily yields call-start times of a load profile in increasing order.
class ArrivalStream {
public:
    ArrivalStream(LoadProfile profile, std::uint64_t seed);
    std::optional<SimTime> next();

private:
    LoadProfile profile_;
    std::mt19937_64 rng_;
    std::size_t segment_ = 0;
    std::uint64_t k_ = 0;        // deterministic: index within segment
    double poisson_t_ = -1;      // poisson: time of last arrival, s
};

struct FailureEntry {
    std::string entity;
    double fail_s = 0;
    double recover_s = 0;
};

using FailureSchedule = std::vector<FailureEntry>;

// Plants kFail/kRecover events for each entry.
void inject_failure(Engine& engine, const FailureSchedule& schedule);

}  // namespace opensim::sim
