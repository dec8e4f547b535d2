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

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "opensim/sip.hpp"

namespace opensim::dpi {

struct Application {
    bool sip = false;
    std::string name;  // protocol name for non-SIP traffic

    static Application Sip() { return {true, "SIP"}; }
    static Application Other(std::string n) { return {false, std::move(n)}; }
    bool operator==(const Application&) const = default;
};

struct Extracted {
    std::string caller;
    std::string callee;
    std::string call_id;
    sip::NameAddr from;
    sip::NameAddr to;
    std::vector<sip::HostPort> via;
    bool operator==(const Extracted&) const = default;
};

struct Computed {
    double delay_ms = 0;
    double jitter_ms = 0;
    double response_time_ms = 0;
    bool operator==(const Computed&) const = default;
};

struct FlowAttributes {
    Application app;
    std::optional<Extracted> extracted;  // set iff app.sip
    Computed computed;
};

FlowAttributes classify(std::string_view payload);
FlowAttributes classify(const sip::Message& msg);

enum class Queue : std::uint8_t { Invite, Bye, Rest };

std::string_view to_string(Queue q);

Queue enqueue(const sip::Message& msg);

// The three controller ingress queues. pop() drains them in a fixed
// priority order, Invite first by default.
template <typename T>
class IngressQueues {
public:
    IngressQueues() = default;
    explicit IngressQueues(std::array<Queue, 3> order) : order_(order) {}

    void push(Queue q, T item) { queues_[static_cast<std::size_t>(q)].push_back(std::move(item)); }

    std::optional<T> pop()
    {
        for (Queue q : order_) {
            auto& d = queues_[static_cast<std::size_t>(q)];
            if (!d.empty()) {
                T item = std::move(d.front());
                d.pop_front();
                return item;
            }
        }
        return std::nullopt;
    }

    std::size_t size(Queue q) const { return queues_[static_cast<std::size_t>(q)].size(); }
    std::size_t size() const { return queues_[0].size() + queues_[1].size() + queues_[2].size(); }
    bool empty() const { return size() == 0; }

private:
    std::array<Queue, 3> order_{Queue::Invite, Queue::Bye, Queue::Rest};
    std::array<std::deque<T>, 3> queues_;
};

struct SessionInfo {
    std::string call_id;
    sip::NameAddr from;
    sip::NameAddr to;
    std::vector<sip::HostPort> via;
    sip::HostPort caller;
    std::string callee;
    double created_s = 0;
};

enum class ErrorKind { NotAnInvite, DuplicateCallIdConflict };
using DpiError = Error<ErrorKind>;

class SessionDatabase {
public:
    const SessionInfo& record_session(const sip::Message& invite, double now_s);
    const SessionInfo* find(const std::string& call_id) const;
    bool erase(const std::string& call_id);
    std::size_t size() const { return sessions_.size(); }
    std::vector<SessionInfo> dump() const;

private:
    std::unordered_map<std::string, SessionInfo> sessions_;
};

// Exponentially smoothed delay/jitter/response-time of one flow, driven by
// packet send and arrival times.
class MetadataSmoother {
public:
    explicit MetadataSmoother(double factor = 0.5) : factor_(factor) {}

    void observe(bool is_request, double sent_ms, double now_ms);
    const Computed& value() const { return value_; }

private:
    double smooth(double prev, double sample, bool first) const
    {
        return first ? sample : factor_ * sample + (1 - factor_) * prev;
    }

    double factor_;
    Computed value_;
    bool have_delay_ = false;
    bool have_rt_ = false;
    double last_delay_ = 0;
    std::optional<double> pending_request_ms_;
};

}  // namespace opensim::dpi
