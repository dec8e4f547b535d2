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

#include "opensim/dpi.hpp"

#include <algorithm>
#include <cmath>

namespace opensim::dpi {

namespace {

struct Signature {
    std::string_view prefix;
    std::string_view app;
};

constexpr Signature kSignatures[] = {
    {"GET ", "HTTP"},   {"POST ", "HTTP"},  {"PUT ", "HTTP"},  {"HEAD ", "HTTP"},
    {"HTTP/", "HTTP"},  {"EHLO ", "SMTP"},  {"HELO ", "SMTP"}, {"MAIL FROM:", "SMTP"},
    {"220 ", "SMTP"},   {"LLDP", "LLDP"},   {"RTP", "RTP"},
};

}  // namespace

FlowAttributes classify(const sip::Message& msg)
{
    FlowAttributes fa;
    fa.app = Application::Sip();
    Extracted ex;
    ex.caller = msg.from.uri;
    ex.callee = msg.to.uri;
    ex.call_id = msg.call_id;
    ex.from = msg.from;
    ex.to = msg.to;
    ex.via = msg.via;
    fa.extracted = std::move(ex);
    return fa;
}

FlowAttributes classify(std::string_view payload)
{
    for (const auto& sig : kSignatures) {
        if (payload.substr(0, sig.prefix.size()) == sig.prefix)
            return {Application::Other(std::string(sig.app)), std::nullopt, {}};
    }
    try {
        return classify(sip::parse(payload));
    } catch (const sip::SipError&) {
        return {Application::Other("unknown"), std::nullopt, {}};
    }
}

std::string_view to_string(Queue q)
{
    switch (q) {
    case Queue::Invite: return "invite";
    case Queue::Bye: return "bye";
    case Queue::Rest: return "rest";
    }
    return "?";
}

Queue enqueue(const sip::Message& msg)
{
    if (msg.is_request(sip::Method::Invite))
        return Queue::Invite;
    if (msg.is_request(sip::Method::Bye))
        return Queue::Bye;
    return Queue::Rest;
}

const SessionInfo& SessionDatabase::record_session(const sip::Message& invite, double now_s)
{
    if (!invite.is_request(sip::Method::Invite))
        throw DpiError(ErrorKind::NotAnInvite, "record_session needs an Invite");
    auto it = sessions_.find(invite.call_id);
    if (it != sessions_.end()) {
        // To-tags may legitimately appear later in the dialog
        if (it->second.from != invite.from || it->second.to.uri != invite.to.uri)
            throw DpiError(ErrorKind::DuplicateCallIdConflict,
                           "Call-ID " + invite.call_id + " reused with different parties");
        return it->second;
    }
    SessionInfo info;
    info.call_id = invite.call_id;
    info.from = invite.from;
    info.to = invite.to;
    info.via = invite.via;
    if (!invite.via.empty())
        info.caller = invite.via.back();
    info.callee = invite.to.uri;
    info.created_s = now_s;
    return sessions_.emplace(invite.call_id, std::move(info)).first->second;
}

const SessionInfo* SessionDatabase::find(const std::string& call_id) const
{
    auto it = sessions_.find(call_id);
    return it == sessions_.end() ? nullptr : &it->second;
}

bool SessionDatabase::erase(const std::string& call_id)
{
    return sessions_.erase(call_id) > 0;
}

std::vector<SessionInfo> SessionDatabase::dump() const
{
    std::vector<SessionInfo> out;
    out.reserve(sessions_.size());
    for (const auto& [id, info] : sessions_)
        out.push_back(info);
    std::sort(out.begin(), out.end(), [](const SessionInfo& a, const SessionInfo& b) {
        return a.created_s != b.created_s ? a.created_s < b.created_s : a.call_id < b.call_id;
    });
    return out;
}

void MetadataSmoother::observe(bool is_request, double sent_ms, double now_ms)
{
    double delay = now_ms - sent_ms;
    if (have_delay_)
        value_.jitter_ms = smooth(value_.jitter_ms, std::abs(delay - last_delay_), false);
    value_.delay_ms = smooth(value_.delay_ms, delay, !have_delay_);
    last_delay_ = delay;
    have_delay_ = true;

    if (is_request) {
        pending_request_ms_ = sent_ms;
    } else if (pending_request_ms_) {
        value_.response_time_ms = smooth(value_.response_time_ms, now_ms - *pending_request_ms_, !have_rt_);
        have_rt_ = true;
        pending_request_ms_.reset();
    }
}

}  // namespace opensim::dpi
