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

#include "opensim/load.hpp"

#include <algorithm>

namespace opensim::ctl {

const ProxyLoad* ProxyLoadView::find(const std::string& id) const
{
    for (const auto& p : proxies) {
        if (p.id == id)
            return &p;
    }
    return nullptr;
}

void LoadEstimator::register_proxy(const std::string& id, double capacity, SimTime now)
{
    State s;
    s.capacity = capacity;
    s.last_update = now;
    s.ever_updated = true;
    s.registered = ++registrations_;
    proxies_[id] = std::move(s);
}

void LoadEstimator::remove_proxy(const std::string& id)
{
    proxies_.erase(id);
}

void LoadEstimator::set_draining(const std::string& id, bool draining)
{
    if (auto it = proxies_.find(id); it != proxies_.end())
        it->second.draining = draining;
}

void LoadEstimator::on_telemetry(const std::string& id, double cpu, double mem, SimTime now)
{
    auto it = proxies_.find(id);
    if (it == proxies_.end())
        return;
    auto& s = it->second;
    s.cpu = std::clamp(cpu, 0.0, 100.0);
    s.mem = std::clamp(mem, 0.0, 100.0);
    s.last_update = now;
    s.ever_updated = true;
    s.reported_down = false;
}

void LoadEstimator::on_port_sample(const std::string& id, double other_app_packets, SimTime now)
{
    auto it = proxies_.find(id);
    if (it == proxies_.end())
        return;
    it->second.port_samples.emplace_back(now, other_app_packets);
    trim(it->second, now);
}

void LoadEstimator::on_assignment(const std::string& id, SimTime now)
{
    auto it = proxies_.find(id);
    if (it == proxies_.end())
        return;
    it->second.assignments.push_back(now);
    trim(it->second, now);
}

void LoadEstimator::trim(State& s, SimTime now) const
{
    SimTime horizon = now - seconds(cfg_.window_s);
    while (!s.assignments.empty() && s.assignments.front() <= horizon)
        s.assignments.pop_front();
    // keep one sample at or before the horizon as the rate baseline
    while (s.port_samples.size() > 2 && s.port_samples[1].first <= horizon)
        s.port_samples.pop_front();
}

bool LoadEstimator::reachable(const State& s, SimTime now) const
{
    if (!s.ever_updated)
        return false;
    SimTime bound = seconds(cfg_.poll_interval_s * cfg_.staleness_polls);
    return now - s.last_update <= bound;
}

ProxyLoadView LoadEstimator::view(SimTime now)
{
    ProxyLoadView v;
    v.proxies.reserve(proxies_.size());
    for (auto& [id, s] : proxies_) {
        trim(s, now);
        ProxyLoad p;
        p.id = id;
        p.capacity = s.capacity;
        p.cpu = s.cpu;
        p.mem = s.mem;
        p.reachable = reachable(s, now);
        p.draining = s.draining;
        p.last_update_s = to_seconds(s.last_update);
        p.registered = s.registered;
        double background = 0;
        if (s.port_samples.size() >= 2) {
            const auto& first = s.port_samples.front();
            const auto& last = s.port_samples.back();
            double dt = to_seconds(last.first - first.first);
            if (dt > 0)
                background = (last.second - first.second) / dt;
        }
        p.load = background + static_cast<double>(s.assignments.size()) / cfg_.window_s;
        v.proxies.push_back(std::move(p));
    }
    return v;
}

std::vector<std::string> LoadEstimator::newly_unreachable(SimTime now)
{
    std::vector<std::string> out;
    for (auto& [id, s] : proxies_) {
        if (!s.reported_down && !reachable(s, now)) {
            s.reported_down = true;
            out.push_back(id);
        }
    }
    return out;
}

std::string_view to_string(Strategy s)
{
    switch (s) {
    case Strategy::MinLoad: return "minload";
    case Strategy::RoundRobin: return "roundrobin";
    case Strategy::Random: return "random";
    case Strategy::FirstFit: return "firstfit";
    }
    return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view s)
{
    for (auto st : {Strategy::MinLoad, Strategy::RoundRobin, Strategy::Random, Strategy::FirstFit}) {
        if (to_string(st) == s)
            return st;
    }
    return std::nullopt;
}

std::string ProxySelector::select(const ProxyLoadView& view)
{
    std::vector<const ProxyLoad*> cands;
    for (const auto& p : view.proxies) {
        if (p.reachable && !p.draining)
            cands.push_back(&p);
    }
    if (cands.empty())
        throw CtlError(ErrorKind::NoReachableProxy, "no reachable proxy");

    auto min_by = [&](auto key) {
        const ProxyLoad* best = cands.front();
        for (const auto* p : cands) {
            if (key(*p) < key(*best))
                best = p;
        }
        return best->id;
    };

    switch (strategy_) {
    case Strategy::MinLoad:
        return min_by([](const ProxyLoad& p) { return p.load; });
    case Strategy::RoundRobin: {
        const ProxyLoad* pick = cands.front();
        if (!last_.empty()) {
            for (const auto* p : cands) {
                if (natural_less(last_, p->id)) {
                    pick = p;
                    break;
                }
            }
        }
        last_ = pick->id;
        return last_;
    }
    case Strategy::Random: {
        std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
        return cands[pick(rng_)]->id;
    }
    case Strategy::FirstFit:
        std::sort(cands.begin(), cands.end(),
                  [](const ProxyLoad* a, const ProxyLoad* b) { return a->registered < b->registered; });
        for (const auto* p : cands) {
            if (p->capacity > 0 && p->load + 1.0 <= fill_ * p->capacity)
                return p->id;
        }
        return min_by([](const ProxyLoad& p) { return p.capacity > 0 ? p.load / p.capacity : p.load; });
    }
    return cands.front()->id;
}

}  // namespace opensim::ctl
