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

#include "opensim/engine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace opensim::sim {

void EventQueue::push(const Event& e)
{
    heap_.push_back(e);
    std::push_heap(heap_.begin(), heap_.end(), EventOrder{});
}

Event EventQueue::pop()
{
    std::pop_heap(heap_.begin(), heap_.end(), EventOrder{});
    Event e = heap_.back();
    heap_.pop_back();
    return e;
}

EntityId Engine::add_entity(std::string name, Entity* entity)
{
    auto id = static_cast<EntityId>(entities_.size());
    by_name_.emplace(name, id);
    entities_.push_back(entity);
    names_.push_back(std::move(name));
    return id;
}

std::optional<EntityId> Engine::find_entity(std::string_view name) const
{
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end())
        return std::nullopt;
    return it->second;
}

std::uint64_t Engine::schedule(SimTime at, EntityId target, std::uint32_t kind, std::uint64_t arg)
{
    if (at < now_)
        throw SimError(ErrorKind::PastEvent, fmt::format("event at {}us is before clock {}us", at, now_));
    if (target >= entities_.size())
        throw SimError(ErrorKind::UnknownEntity, fmt::format("no entity with id {}", target));
    std::uint64_t seq = next_seq_++;
    queue_.push(Event{at, seq, target, kind, arg});
    return seq;
}

RunStats Engine::run_until(SimTime t)
{
    if (t < now_)
        throw SimError(ErrorKind::PastEvent, fmt::format("run_until {}us is before clock {}us", t, now_));
    std::uint64_t start = fired_;
    while (!queue_.empty() && queue_.top().time <= t) {
        Event e = queue_.pop();
        now_ = e.time;
        ++fired_;
        entities_[e.target]->on_event(*this, e);
    }
    now_ = t;
    return RunStats{fired_ - start, now_};
}

void Engine::trace(std::string_view entity, std::string_view kind, std::string_view summary)
{
    if (!trace_)
        return;
    *trace_ << "t=" << now_ << ' ' << entity << ' ' << kind << ' ' << summary << '\n';
}

Link::Link(double mbps, double delay_ms, SimTime interval)
    : mbps_(mbps), propagation_(millis(delay_ms)), interval_(interval)
{
}

double Link::capacity_bytes_per_interval() const
{
    return mbps_ * 1e6 / 8.0 * to_seconds(interval_);
}

SimTime Link::transmit(int dir, SimTime now, std::uint32_t bytes)
{
    double rate = mbps_ * 1e6 / 8.0 - background_[dir];  // bytes per second left for us
    rate = std::max(rate, mbps_ * 1e6 / 8.0 * 0.01);
    SimTime start = std::max(now, next_free_[dir]);
    auto ser = static_cast<SimTime>(std::ceil(bytes / rate * 1e6));
    SimTime end = start + std::max<SimTime>(ser, 1);
    next_free_[dir] = end;
    account(dir, start, end, bytes);
    return end + propagation_;
}

void Link::account(int dir, SimTime start, SimTime end, double bytes)
{
    auto& v = bytes_[dir];
    auto last = static_cast<std::size_t>((end - 1) / interval_);
    if (v.size() <= last)
        v.resize(last + 1, 0.0);
    double span = static_cast<double>(end - start);
    for (auto k = static_cast<std::size_t>(start / interval_); k <= last; ++k) {
        SimTime lo = std::max<SimTime>(start, static_cast<SimTime>(k) * interval_);
        SimTime hi = std::min<SimTime>(end, static_cast<SimTime>(k + 1) * interval_);
        v[k] += bytes * static_cast<double>(hi - lo) / span;
    }
}

double Link::interval_bytes(int dir, std::size_t k) const
{
    double b = k < bytes_[dir].size() ? bytes_[dir][k] : 0.0;
    return b + background_[dir] * to_seconds(interval_);
}

double Link::utilization(int dir, std::size_t k) const
{
    return 100.0 * interval_bytes(dir, k) / capacity_bytes_per_interval();
}

void LoadProfile::validate() const
{
    double prev_end = segments.empty() ? 0 : segments.front().start_s;
    for (const auto& s : segments) {
        if (s.end_s <= s.start_s)
            throw SimError(ErrorKind::InvalidProfile,
                           fmt::format("segment [{}, {}) is empty", s.start_s, s.end_s));
        if (s.rate_cps < 0)
            throw SimError(ErrorKind::InvalidProfile, "negative segment rate");
        if (std::abs(s.start_s - prev_end) > 1e-9)
            throw SimError(ErrorKind::InvalidProfile,
                           fmt::format("segment starting at {} does not follow {}", s.start_s, prev_end));
        prev_end = s.end_s;
    }
}

double LoadProfile::expected_calls() const
{
    double n = 0;
    for (const auto& s : segments)
        n += (s.end_s - s.start_s) * s.rate_cps;
    return n;
}

ArrivalStream::ArrivalStream(LoadProfile profile, std::uint64_t seed)
    : profile_(std::move(profile)), rng_(seed)
{
    profile_.validate();
}

std::optional<SimTime> ArrivalStream::next()
{
    while (segment_ < profile_.segments.size()) {
        const Segment& s = profile_.segments[segment_];
        if (s.rate_cps <= 0) {
            ++segment_;
            continue;
        }
        if (profile_.process == ArrivalProcess::Deterministic) {
            SimTime start = seconds(s.start_s);
            SimTime end = seconds(s.end_s);
            auto offset = static_cast<SimTime>(std::floor(static_cast<long double>(k_) * 1e6L / s.rate_cps));
            SimTime t = start + offset;
            if (t < end) {
                ++k_;
                return t;
            }
            k_ = 0;
            ++segment_;
        } else {
            double from = std::max(poisson_t_, s.start_s);
            std::exponential_distribution<double> gap(s.rate_cps);
            double t = from + gap(rng_);
            SimTime ts = seconds(t);
            if (ts < seconds(s.end_s)) {
                poisson_t_ = t;
                return ts;
            }
            poisson_t_ = s.end_s;
            ++segment_;
        }
    }
    return std::nullopt;
}

void inject_failure(Engine& engine, const FailureSchedule& schedule)
{
    for (const auto& f : schedule) {
        if (!(f.fail_s < f.recover_s))
            throw SimError(ErrorKind::InvalidSchedule,
                           fmt::format("failure of {} must end after it starts", f.entity));
        if (!engine.find_entity(f.entity))
            throw SimError(ErrorKind::UnknownEntity, fmt::format("unknown entity '{}'", f.entity));
    }
    for (const auto& f : schedule) {
        EntityId id = *engine.find_entity(f.entity);
        engine.schedule(seconds(f.fail_s), id, kFail);
        engine.schedule(seconds(f.recover_s), id, kRecover);
    }
}

}  // namespace opensim::sim
