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

#include "opensim/balancer.hpp"

#include <algorithm>
#include <numeric>

namespace opensim::lb {

std::string_view to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::Tlwl: return "tlwl";
    case Algorithm::Fwar: return "fwar";
    case Algorithm::Hwar: return "hwar";
    }
    return "?";
}

std::optional<Algorithm> algorithm_from_string(std::string_view s)
{
    for (auto a : {Algorithm::Tlwl, Algorithm::Fwar, Algorithm::Hwar}) {
        if (to_string(a) == s)
            return a;
    }
    return std::nullopt;
}

double decayed_score(double current, const std::vector<double>& history, double decay)
{
    double num = current;
    double den = 1.0;
    double w = 1.0;
    for (double h : history) {
        w *= decay;
        num += w * h;
        den += w;
    }
    return num / den;
}

Dispatcher::Dispatcher(DispatchConfig cfg, std::vector<std::string> proxies) : cfg_(cfg)
{
    for (auto& p : proxies)
        proxies_[p];
    for (const auto& [id, _] : proxies_)
        order_.push_back(id);
}

bool Dispatcher::fresh(const Sample& s, SimTime now) const
{
    return cfg_.sample_ttl_s <= 0 || now - s.at <= seconds(cfg_.sample_ttl_s);
}

double Dispatcher::mean(const std::deque<Sample>& w, SimTime now) const
{
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : w) {
        if (fresh(s, now)) {
            sum += s.ms;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

void Dispatcher::roll(ProxyState& p, SimTime now) const
{
    auto stride = now / std::max<SimTime>(1, seconds(cfg_.stride_s));
    std::size_t steps = 0;
    while (p.stride < stride && steps < cfg_.history + 1) {
        // snapshot as of the end of the stride being closed
        const SimTime end = (p.stride + 1) * std::max<SimTime>(1, seconds(cfg_.stride_s));
        p.history.insert(p.history.begin(), mean(p.window, end));
        if (p.history.size() > cfg_.history)
            p.history.pop_back();
        ++p.stride;
        ++steps;
    }
    p.stride = std::max(p.stride, stride);
}

std::string Dispatcher::pick(SimTime now)
{
    if (order_.empty())
        throw LbError(ErrorKind::NoProxyAvailable, "balancer has no proxies");
    const std::string* best = nullptr;
    double best_key = 0;
    for (const auto& id : order_) {
        auto& p = proxies_[id];
        double key = 0;
        switch (cfg_.algorithm) {
        case Algorithm::Tlwl:
            key = p.counter;
            break;
        case Algorithm::Fwar:
            key = mean(p.window, now);
            break;
        case Algorithm::Hwar:
            roll(p, now);
            key = decayed_score(mean(p.window, now), p.history, cfg_.decay);
            break;
        }
        if (!best || key < best_key) {
            best = &id;
            best_key = key;
        }
    }
    return *best;
}

std::string Dispatcher::assign(const sip::Message& msg, SimTime now)
{
    auto it = calls_.find(msg.call_id);
    if (msg.is_request(sip::Method::Invite)) {
        if (it != calls_.end())
            return it->second.proxy;
        std::string proxy = pick(now);
        proxies_[proxy].counter += cfg_.invite_weight;
        calls_.emplace(msg.call_id, Call{proxy, now});
        return proxy;
    }
    if (it == calls_.end())
        throw LbError(ErrorKind::UnknownCall, "no call " + msg.call_id);
    if (msg.is_request(sip::Method::Bye) && !it->second.bye_open) {
        it->second.bye_open = true;
        proxies_[it->second.proxy].counter += cfg_.bye_weight;
    }
    return it->second.proxy;
}

void Dispatcher::on_response(const sip::Message& rsp, SimTime now)
{
    if (!rsp.is_response())
        return;
    auto it = calls_.find(rsp.call_id);
    if (it == calls_.end())
        return;
    Call& c = it->second;
    // The sample is the proxy's own turnaround: its 100 Trying, or the final
    // response if that comes first. Ring time at the callee is not its load.
    if (rsp.cseq.method == sip::Method::Invite && !c.sampled) {
        c.sampled = true;
        add_sample(c.proxy, to_millis(now - c.invite_at), now);
    }
    if (!rsp.status().is_final())
        return;
    auto& p = proxies_[c.proxy];
    if (rsp.cseq.method == sip::Method::Invite && c.invite_open) {
        c.invite_open = false;
        p.counter -= cfg_.invite_weight;
        if (rsp.status().code >= 300)
            calls_.erase(it);
    } else if (rsp.cseq.method == sip::Method::Bye && c.bye_open) {
        p.counter -= cfg_.bye_weight;
        calls_.erase(it);
    }
}

void Dispatcher::add_sample(const std::string& proxy, double ms, SimTime now)
{
    auto& p = proxies_[proxy];
    roll(p, now);
    p.window.push_back({now, ms});
    while (p.window.size() > cfg_.window || (!p.window.empty() && !fresh(p.window.front(), now)))
        p.window.pop_front();
}

double Dispatcher::counter(const std::string& proxy) const
{
    auto it = proxies_.find(proxy);
    return it == proxies_.end() ? 0.0 : it->second.counter;
}

double Dispatcher::window_mean(const std::string& proxy, SimTime now) const
{
    auto it = proxies_.find(proxy);
    return it == proxies_.end() ? 0.0 : mean(it->second.window, now);
}

std::size_t Dispatcher::window_size(const std::string& proxy, SimTime now) const
{
    auto it = proxies_.find(proxy);
    if (it == proxies_.end())
        return 0;
    const auto& w = it->second.window;
    return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [&](const Sample& x) { return fresh(x, now); }));
}

double Dispatcher::hwar_score(const std::string& proxy, SimTime now)
{
    auto& p = proxies_[proxy];
    roll(p, now);
    return decayed_score(mean(p.window, now), p.history, cfg_.decay);
}

std::optional<std::string> Dispatcher::affinity(const std::string& call_id) const
{
    auto it = calls_.find(call_id);
    if (it == calls_.end())
        return std::nullopt;
    return it->second.proxy;
}

namespace {

std::vector<std::string> proxy_ids(const BalancerConfig& cfg)
{
    std::vector<std::string> out;
    for (const auto& [id, ip] : cfg.proxies)
        out.push_back(id);
    return out;
}

}  // namespace

Balancer::Balancer(BalancerConfig cfg)
    : cfg_(std::move(cfg)),
      via_host_(cfg_.ip.str()),
      res_(cfg_.capacity_cps, cfg_.call_weight, cfg_.window_s, cfg_.tick_s, cfg_.inflation_cap),
      dispatch_(cfg_.dispatch, proxy_ids(cfg_))
{
    for (const auto& [id, ip] : cfg_.proxies)
        proxy_ip_[id] = ip;
}

proxy::ProxyOutcome Balancer::process_message(const sip::Message& msg, Ipv4 from, SimTime now)
{
    proxy::ProxyOutcome oc;
    ++interval_.messages;
    if (msg.is_request()) {
        const bool invite = msg.is_request(sip::Method::Invite);
        if (invite && !caller_.count(msg.call_id)) {
            if (!res_.admit(now, 0)) {
                ++interval_.rejected;
                oc.kind = proxy::ProxyOutcome::Kind::Rejected;
                oc.service_time = res_.service_time(1.0);
                oc.out.push_back({sip::make_response(msg, sip::StatusCode(503)), from});
                return oc;
            }
            caller_[msg.call_id] = from;
            invite_at_[msg.call_id] = now;
        } else if (!caller_.count(msg.call_id)) {
            return oc;
        }
        std::string proxy = dispatch_.assign(msg, now);
        res_.charge(1.0, now);
        sip::Message out = msg;
        out.via.insert(out.via.begin(), sip::HostPort{via_host_, 5060});
        if (invite)
            out.record_route.insert(out.record_route.begin(), cfg_.id);
        oc.kind = proxy::ProxyOutcome::Kind::Forwarded;
        oc.service_time = res_.service_time(1.0);
        oc.out.push_back({std::move(out), proxy_ip_.at(proxy)});
        return oc;
    }

    auto it = caller_.find(msg.call_id);
    if (it == caller_.end() || msg.via.empty() || msg.via.front().host != via_host_)
        return oc;
    res_.charge(1.0, now);
    sip::Message out = msg;
    out.via.erase(out.via.begin());
    Ipv4 caller = it->second;
    dispatch_.on_response(msg, now);
    const int code = msg.status().code;
    if (msg.cseq.method == sip::Method::Invite && code >= 200) {
        auto t = invite_at_.find(msg.call_id);
        if (t != invite_at_.end()) {
            interval_.response_ms_sum += to_millis(now - t->second);
            ++interval_.responses;
            invite_at_.erase(t);
        }
        if (code >= 300)
            caller_.erase(it);
    } else if (msg.cseq.method == sip::Method::Bye && code >= 200) {
        ++interval_.completed;
        caller_.erase(it);
    }
    oc.kind = proxy::ProxyOutcome::Kind::Forwarded;
    oc.service_time = res_.service_time(1.0);
    oc.out.push_back({std::move(out), caller});
    return oc;
}

Balancer::Interval Balancer::take_interval()
{
    Interval out = interval_;
    interval_ = {};
    return out;
}

}  // namespace opensim::lb
