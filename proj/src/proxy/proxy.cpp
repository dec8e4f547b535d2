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

#include "opensim/proxy.hpp"

#include <algorithm>
#include <cmath>

namespace opensim::proxy {

double inflation(double cpu_percent, double cap)
{
    double u = cpu_percent / 100.0;
    if (u >= 1.0)
        return cap;
    return std::min(cap, 1.0 / (1.0 - u));
}

namespace {

SimTime tick_length(double tick_s)
{
    return std::max<SimTime>(1, seconds(tick_s));
}

}  // namespace

ResourceModel::ResourceModel(double capacity_cps, double call_weight, double window_s, double tick_s,
                             double inflation_cap)
    : capacity_(capacity_cps),
      call_weight_(call_weight),
      window_s_(window_s),
      tick_us_(tick_length(tick_s)),
      inflation_cap_(inflation_cap)
{
    window_ticks_ = static_cast<std::int64_t>(std::max<double>(1.0, std::round(window_s / tick_s)));
    // one extra slot for the tick in progress
    work_.assign(static_cast<std::size_t>(window_ticks_ + 1), 0.0);
}

void ResourceModel::advance(SimTime now)
{
    std::int64_t t = now / tick_us_;
    auto n = static_cast<std::int64_t>(work_.size());
    if (t > work_tick_) {
        for (std::int64_t k = work_tick_ + 1; k <= t && k <= work_tick_ + n; ++k)
            work_[static_cast<std::size_t>(k % n)] = 0;
        work_tick_ = t;
    }
}

void ResourceModel::charge(double weight, SimTime now)
{
    advance(now);
    auto n = static_cast<std::int64_t>(work_.size());
    work_[static_cast<std::size_t>(work_tick_ % n)] += weight;
}

double ResourceModel::tick(SimTime now, double background)
{
    advance(now);
    // the current tick has only just started; use the full ticks before it
    auto n = static_cast<std::int64_t>(work_.size());
    double sum = 0;
    for (std::int64_t k = work_tick_ - window_ticks_; k < work_tick_; ++k) {
        if (k >= 0)
            sum += work_[static_cast<std::size_t>(k % n)];
    }
    double rate = sum / window_s_ / call_weight_;
    cpu_ = std::min(100.0, 100.0 * (background + rate) / capacity_);
    return cpu_;
}

void ResourceModel::trim(SimTime now)
{
    SimTime horizon = now - seconds(window_s_);
    while (!admissions_.empty() && admissions_.front() <= horizon)
        admissions_.pop_front();
}

double ResourceModel::reserved_cpu(SimTime now, double background)
{
    trim(now);
    double load = background + static_cast<double>(admissions_.size()) / window_s_;
    return std::min(100.0, 100.0 * load / capacity_);
}

bool ResourceModel::admit(SimTime now, double background)
{
    if (reserved_cpu(now, background) >= 100.0)
        return false;
    admissions_.push_back(now);
    return true;
}

SimTime ResourceModel::service_time(double weight) const
{
    double s = weight / (capacity_ * call_weight_) * inflation(cpu_, inflation_cap_);
    return std::max<SimTime>(1, static_cast<SimTime>(std::llround(s * 1e6)));
}

void ResourceModel::clear()
{
    std::fill(work_.begin(), work_.end(), 0.0);
    admissions_.clear();
}

Proxy::Proxy(ProxyConfig cfg)
    : cfg_(std::move(cfg)),
      res_(cfg_.capacity_cps, cfg_.call_weight, cfg_.window_s, cfg_.tick_s, cfg_.inflation_cap)
{
    if (cfg_.via_host.empty())
        cfg_.via_host = cfg_.ip.str();
    resource_tick(0);
}

void Proxy::resource_tick(SimTime now)
{
    res_.tick(now, background());
    mem_ = std::min(100.0, cfg_.mem_base + cfg_.mem_per_transaction * static_cast<double>(active_transactions_));
}

double Proxy::reserved_cpu(SimTime now)
{
    return res_.reserved_cpu(now, background());
}

sip::Message Proxy::forwarded(const sip::Message& msg, bool add_route) const
{
    sip::Message out = msg;
    out.via.insert(out.via.begin(), sip::HostPort{cfg_.via_host, 5060});
    if (add_route && cfg_.record_route)
        out.record_route.insert(out.record_route.begin(), cfg_.id);
    return out;
}

ProxyOutcome Proxy::process_message(const sip::Message& msg, Ipv4 from, SimTime now)
{
    if (!available_)
        throw ProxyError(ErrorKind::ProxyDown, "proxy " + cfg_.id + " is down");
    ++totals_.received;
    ProxyOutcome oc;

    if (msg.is_request()) {
        const auto method = msg.request().method;
        if (method == sip::Method::Invite) {
            if (dialogs_.count(msg.call_id))
                return oc;  // retransmission, already forwarded
            if (!res_.admit(now, background())) {
                ++totals_.rejected;
                ++interval_.rejected;
                oc.kind = ProxyOutcome::Kind::Rejected;
                // admission control is not charged, but the 503 still waits its turn
                oc.service_time = res_.service_time(cfg_.other_weight);
                oc.out.push_back({sip::make_response(msg, sip::StatusCode(503)), from});
                return oc;
            }
            ++totals_.admitted;
            totals_.processed += 2;  // the Invite and the 100 Trying we generate
            res_.charge(cfg_.invite_weight + cfg_.other_weight, now);
            ++active_transactions_;

            Dialog d;
            d.caller = from;
            auto reg = registrar_.find(msg.to.uri);
            d.callee = reg != registrar_.end() ? reg->second : cfg_.default_route;
            d.invite_at = now;
            dialogs_.emplace(msg.call_id, d);

            oc.kind = ProxyOutcome::Kind::Forwarded;
            oc.service_time = res_.service_time(cfg_.invite_weight);
            oc.out.push_back({sip::make_response(msg, sip::StatusCode(100)), from});
            oc.out.push_back({forwarded(msg, true), d.callee});
            return oc;
        }
        if (method == sip::Method::Register) {
            ++totals_.processed;
            res_.charge(cfg_.other_weight, now);
            register_binding(msg.to.uri, from);
            oc.kind = ProxyOutcome::Kind::Responded;
            oc.service_time = res_.service_time(cfg_.other_weight);
            oc.out.push_back({sip::make_response(msg, sip::StatusCode(200)), from});
            return oc;
        }
        auto it = dialogs_.find(msg.call_id);
        if (it == dialogs_.end()) {
            if (method == sip::Method::Ack)
                return oc;
            ++totals_.processed;
            res_.charge(cfg_.other_weight, now);
            oc.kind = ProxyOutcome::Kind::Responded;
            oc.service_time = res_.service_time(cfg_.other_weight);
            int code = method == sip::Method::Options ? 200 : 481;
            oc.out.push_back({sip::make_response(msg, sip::StatusCode(code)), from});
            return oc;
        }
        Dialog& d = it->second;
        ++totals_.processed;
        res_.charge(cfg_.other_weight, now);
        if (method == sip::Method::Bye && !d.bye_open) {
            d.bye_open = true;
            ++active_transactions_;
        }
        Ipv4 next = from == d.callee ? d.caller : d.callee;
        oc.kind = ProxyOutcome::Kind::Forwarded;
        oc.service_time = res_.service_time(cfg_.other_weight);
        oc.out.push_back({forwarded(msg, false), next});
        return oc;
    }

    // responses
    auto it = dialogs_.find(msg.call_id);
    if (it == dialogs_.end() || msg.via.empty() || msg.via.front().host != cfg_.via_host)
        return oc;
    Dialog& d = it->second;
    ++totals_.processed;
    res_.charge(cfg_.other_weight, now);
    sip::Message out = msg;
    out.via.erase(out.via.begin());
    Ipv4 next = from == d.caller ? d.callee : d.caller;
    const int code = msg.status().code;
    bool close = false;
    if (msg.cseq.method == sip::Method::Invite && code >= 200 && d.invite_open) {
        d.invite_open = false;
        --active_transactions_;
        interval_.response_ms_sum += to_millis(now - d.invite_at);
        ++interval_.responses;
        close = code >= 300;
    } else if (msg.cseq.method == sip::Method::Bye && code >= 200 && d.bye_open) {
        d.bye_open = false;
        --active_transactions_;
        ++totals_.completed;
        ++interval_.completed;
        close = true;
    }
    if (close)
        dialogs_.erase(it);
    oc.kind = ProxyOutcome::Kind::Forwarded;
    oc.service_time = res_.service_time(cfg_.other_weight);
    oc.out.push_back({std::move(out), next});
    return oc;
}

void Proxy::set_availability(bool available, SimTime now)
{
    if (available == available_)
        return;
    available_ = available;
    if (!available) {
        totals_.dropped_on_failure += dialogs_.size();
        dialogs_.clear();
        active_transactions_ = 0;
        res_.clear();
    }
    resource_tick(now);
}

Proxy::Interval Proxy::take_interval()
{
    Interval out = interval_;
    interval_ = {};
    return out;
}

}  // namespace opensim::proxy
