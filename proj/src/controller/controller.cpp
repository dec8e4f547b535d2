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

#include "opensim/controller.hpp"

#include <algorithm>
#include <iterator>

#include <fmt/format.h>

namespace opensim::ctl {

std::string_view to_string(Mode m)
{
    switch (m) {
    case Mode::Partial: return "partial";
    case Mode::Full: return "full";
    case Mode::Nfv: return "nfv";
    }
    return "?";
}

namespace {

// "sip:UAS@domain" -> "UAS"
std::string uri_user(const std::string& uri)
{
    std::string_view v = uri;
    if (v.rfind("sip:", 0) == 0)
        v.remove_prefix(4);
    auto at = v.find('@');
    return std::string(v.substr(0, at));
}

}  // namespace

Controller::Controller(ControllerConfig cfg)
    : cfg_(cfg), estimator_(cfg.estimator), selector_(cfg.strategy, cfg.seed, cfg.fill)
{
}

void Controller::add_proxy(const std::string& id, double capacity, SimTime now)
{
    proxies_[id] = capacity;
    estimator_.register_proxy(id, capacity, now);
}

void Controller::remove_proxy(const std::string& id)
{
    proxies_.erase(id);
    estimator_.remove_proxy(id);
}

const SessionRecord* Controller::session(const std::string& call_id) const
{
    auto it = sessions_.find(call_id);
    return it == sessions_.end() ? nullptr : &it->second;
}

of::Packet Controller::reply_packet(const of::PacketIn& origin, sip::Message msg) const
{
    of::Packet p;
    p.ip_src = cfg_.service_ip;
    p.ip_dst = origin.packet.ip_src;
    p.eth_dst = origin.packet.eth_src;
    p.l4_dst = origin.packet.l4_src;
    p.bytes = cfg_.message_bytes;
    p.sip = std::make_shared<const sip::Message>(std::move(msg));
    return p;
}

std::vector<of::ControllerMsg> Controller::handle_packet_in(const of::PacketIn& in, SimTime now)
{
    ++counters_.packet_ins;
    if (!in.packet.sip)
        throw CtlError(ErrorKind::NotSip, "PacketIn without a SIP payload on " + in.switch_id);
    const sip::Message& msg = *in.packet.sip;

    if (cfg_.mode == Mode::Full && msg.is_request(sip::Method::Register)) {
        ++counters_.packet_outs;
        return {register_user(msg, in, now)};
    }
    if (msg.is_request(sip::Method::Invite))
        return handle_invite(in, msg, now);
    if (msg.is_request(sip::Method::Bye)) {
        if (auto it = sessions_.find(msg.call_id); it != sessions_.end())
            it->second.phase = sip::CallPhase::ByeSent;
    }
    return forward_only(in, msg);
}

const std::vector<std::string>& Controller::route(const std::string& src, const std::string& dst)
{
    auto key = std::make_pair(src, dst);
    auto it = routes_.find(key);
    if (it == routes_.end())
        it = routes_.emplace(std::move(key), shortest_path(topo_, src, dst, cfg_.weight)).first;
    return it->second;
}

void Controller::install_segment(SessionRecord& rec, std::vector<of::ControllerMsg>& out,
                                 std::vector<std::pair<std::string_view, std::uint32_t>>& seen,
                                 const std::string& from_sw, const HostAttachment& to, Ipv4 match_dst)
{
    const std::vector<std::string>& path = route(from_sw, to.sw);
    for (std::size_t i = 0; i < path.size(); ++i) {
        const std::string& sw = path[i];
        const std::pair<std::string_view, std::uint32_t> key{sw, match_dst.value()};
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            continue;
        seen.push_back(key);
        of::PortNo port = to.port;
        if (i + 1 < path.size())
            port = *topo_.port_toward(sw, path[i + 1]);
        of::FlowMod mod;
        mod.switch_id = sw;
        mod.command = of::FlowMod::Command::Add;
        mod.rule.cookie = next_cookie_++;
        mod.rule.priority = cfg_.rule_priority;
        mod.rule.match.application = "SIP";
        mod.rule.match.call_id = rec.call_id;
        mod.rule.match.ip_dst = match_dst;
        mod.rule.action = of::ForwardTo{{port}};
        rec.rules.push_back({sw, mod.rule.cookie});
        out.emplace_back(std::move(mod));
    }
    rec.segments.push_back(path);
}

std::vector<of::ControllerMsg> Controller::handle_invite(const of::PacketIn& in, const sip::Message& msg,
                                                         SimTime now)
{
    if (sessions_.count(msg.call_id)) {
        // already routed: just release the packet through the table again
        ++counters_.packet_outs;
        return {of::PacketOut{in.switch_id, of::kTablePort, in.packet}};
    }

    const HostAttachment* caller = topo_.host_by_ip(in.packet.ip_src);
    if (!caller)
        throw CtlError(ErrorKind::Unreachable, "caller " + in.packet.ip_src.str() + " is not attached");

    SessionRecord rec;
    rec.call_id = msg.call_id;
    rec.phase = sip::CallPhase::InviteSent;
    // (switch, destination) pairs that already have a rule; paths are short
    std::vector<std::pair<std::string_view, std::uint32_t>> seen;
    rec.rules.reserve(12);
    std::vector<of::ControllerMsg> out;
    out.reserve(14);

    if (cfg_.mode == Mode::Full) {
        auto reg = registrar_.find(msg.to.uri);
        const HostAttachment* callee = reg == registrar_.end() ? nullptr : topo_.host_by_ip(reg->second.ip);
        if (!callee)
            throw CtlError(ErrorKind::UnknownCallee, "callee " + msg.to.uri + " is not registered");
        rec.assigned = callee->name;
        rec.path = route(caller->sw, callee->sw);
        install_segment(rec, out, seen, caller->sw, *callee, cfg_.service_ip);
        install_segment(rec, out, seen, callee->sw, *caller, caller->ip);
    } else {
        std::string proxy = selector_.select(estimator_.view(now));
        const HostAttachment* ph = topo_.host(proxy);
        if (!ph)
            throw CtlError(ErrorKind::Unreachable, "proxy " + proxy + " is not attached");
        rec.assigned = proxy;
        rec.path = route(caller->sw, ph->sw);
        install_segment(rec, out, seen, caller->sw, *ph, cfg_.service_ip);
        install_segment(rec, out, seen, ph->sw, *caller, caller->ip);
        if (const HostAttachment* callee = topo_.host(uri_user(msg.to.uri)); callee && callee != caller) {
            install_segment(rec, out, seen, ph->sw, *callee, callee->ip);
            install_segment(rec, out, seen, callee->sw, *ph, cfg_.service_ip);
        }
        estimator_.on_assignment(proxy, now);
    }

    session_db_.record_session(msg, to_seconds(now));
    counters_.flow_mods += rec.rules.size();
    ++counters_.sessions_opened;
    sessions_.emplace(rec.call_id, std::move(rec));

    if (cfg_.mode == Mode::Full) {
        if (auto trying = make_proxy_response(msg, in)) {
            ++counters_.packet_outs;
            out.emplace_back(std::move(*trying));
        }
    }
    ++counters_.packet_outs;
    out.emplace_back(of::PacketOut{in.switch_id, of::kTablePort, in.packet});
    return out;
}

std::vector<of::ControllerMsg> Controller::forward_only(const of::PacketIn& in, const sip::Message& msg)
{
    const HostAttachment* target = nullptr;
    if (in.packet.ip_dst == cfg_.service_ip) {
        if (cfg_.mode == Mode::Full) {
            if (auto reg = registrar_.find(msg.to.uri); reg != registrar_.end() && msg.is_request())
                target = topo_.host_by_ip(reg->second.ip);
        } else if (auto s = sessions_.find(msg.call_id); s != sessions_.end()) {
            target = topo_.host(s->second.assigned);
        } else {
            std::vector<std::string> live;
            for (const auto& [id, cap] : proxies_)
                live.push_back(id);
            if (!live.empty())
                target = topo_.host(live[fnv1a(msg.call_id) % live.size()]);
        }
    } else {
        target = topo_.host_by_ip(in.packet.ip_dst);
    }
    if (!target)
        return {};
    const auto& path = route(in.switch_id, target->sw);
    of::PortNo out = path.size() > 1 ? *topo_.port_toward(path[0], path[1]) : target->port;
    ++counters_.packet_outs;
    return {of::PacketOut{in.switch_id, out, in.packet}};
}

of::PacketOut Controller::register_user(const sip::Message& reg, const of::PacketIn& origin, SimTime now)
{
    RegistrarEntry e;
    e.contact = reg.contact ? *reg.contact : (reg.via.empty() ? sip::HostPort{} : reg.via.back());
    e.ip = origin.packet.ip_src;
    e.registered_s = to_seconds(now);
    registrar_[reg.to.uri] = e;
    ++counters_.registrations;
    return of::PacketOut{origin.switch_id, origin.in_port,
                         reply_packet(origin, sip::make_response(reg, sip::StatusCode(200)))};
}

std::optional<of::PacketOut> Controller::make_proxy_response(const sip::Message& invite, const of::PacketIn& origin)
{
    if (!invite.is_request(sip::Method::Invite))
        return std::nullopt;
    auto it = sessions_.find(invite.call_id);
    if (it != sessions_.end()) {
        if (it->second.trying_sent)
            return std::nullopt;
        it->second.trying_sent = true;
    }
    return of::PacketOut{origin.switch_id, origin.in_port,
                         reply_packet(origin, sip::make_response(invite, sip::StatusCode(100)))};
}

of::PacketOut Controller::reject(const of::PacketIn& origin, int code) const
{
    return of::PacketOut{origin.switch_id, origin.in_port,
                         reply_packet(origin, sip::make_response(*origin.packet.sip, sip::StatusCode(code)))};
}

std::vector<of::FlowMod> Controller::terminate_session(const std::string& call_id)
{
    auto it = sessions_.find(call_id);
    if (it == sessions_.end())
        throw CtlError(ErrorKind::UnknownSession, "no session " + call_id);
    std::vector<of::FlowMod> out;
    out.reserve(it->second.rules.size());
    for (const auto& add : it->second.rules) {
        of::FlowMod rm;
        rm.switch_id = add.switch_id;
        rm.command = of::FlowMod::Command::Remove;
        rm.rule.cookie = add.cookie;
        out.push_back(std::move(rm));
    }
    sessions_.erase(it);
    session_db_.erase(call_id);
    counters_.flow_mods += out.size();
    ++counters_.sessions_closed;
    return out;
}

std::vector<of::FlowMod> Controller::teardown_proxy(const std::string& proxy_id)
{
    std::vector<std::string> ids;
    for (const auto& [cid, rec] : sessions_) {
        if (rec.assigned == proxy_id)
            ids.push_back(cid);
    }
    std::sort(ids.begin(), ids.end());
    std::vector<of::FlowMod> out;
    for (const auto& cid : ids) {
        auto mods = terminate_session(cid);
        std::move(mods.begin(), mods.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace opensim::ctl
