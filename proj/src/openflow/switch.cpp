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

#include "opensim/openflow.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace opensim::of {

std::string Packet::payload() const
{
    return sip ? sip::serialize(*sip) : raw;
}

bool MatchFields::all_wildcard() const
{
    return !in_port && !eth_src && !eth_dst && !ip_src && !ip_dst && !l4_src && !l4_dst &&
           !application && !has_l7();
}

PacketView PacketView::of(PortNo in_port, const Packet& pkt)
{
    PacketView v;
    v.in_port = in_port;
    v.pkt = &pkt;
    if (pkt.sip) {
        const auto& m = *pkt.sip;
        v.application = "SIP";
        v.sip_method = m.method();
        v.call_id = m.call_id;
        v.from = m.from.uri;
        v.to = m.to.uri;
    } else {
        v.application = dpi::classify(pkt.raw).app.name;
    }
    return v;
}

bool matches(const MatchFields& m, const PacketView& v)
{
    const Packet& p = *v.pkt;
    if (m.in_port && *m.in_port != v.in_port)
        return false;
    if (m.eth_src && *m.eth_src != p.eth_src)
        return false;
    if (m.eth_dst && *m.eth_dst != p.eth_dst)
        return false;
    if (m.ip_src && *m.ip_src != p.ip_src)
        return false;
    if (m.ip_dst && *m.ip_dst != p.ip_dst)
        return false;
    if (m.l4_src && *m.l4_src != p.l4_src)
        return false;
    if (m.l4_dst && *m.l4_dst != p.l4_dst)
        return false;
    if (m.application && *m.application != v.application)
        return false;
    if (m.has_l7()) {
        if (!p.sip)
            return false;
        if (m.sip_method && m.sip_method != v.sip_method)
            return false;
        if (m.call_id && *m.call_id != v.call_id)
            return false;
        if (m.from && *m.from != v.from)
            return false;
        if (m.to && *m.to != v.to)
            return false;
    }
    return true;
}

namespace {

bool better(const FlowRule& a, const FlowRule& b)
{
    if (a.priority != b.priority)
        return a.priority > b.priority;
    return a.install_seq < b.install_seq;
}

}  // namespace

FlowRule& FlowTable::add(FlowRule rule)
{
    if (rule.match.all_wildcard())
        throw OfError(ErrorKind::InvalidRule, "rule must match on at least one field");
    if (rule.match.has_l7() && rule.match.application && *rule.match.application != "SIP")
        throw OfError(ErrorKind::InvalidRule, "SIP fields on a non-SIP rule");
    if (rules_.count(rule.cookie))
        throw OfError(ErrorKind::DuplicateCookie, fmt::format("cookie {:#x} already installed", rule.cookie));
    rule.install_seq = next_seq_++;
    rule.stats = {};
    auto [it, _] = rules_.emplace(rule.cookie, Entry{std::move(rule), dpi::MetadataSmoother{}});
    Entry* e = &it->second;
    if (e->rule.match.call_id)
        by_call_[*e->rule.match.call_id].push_back(e);
    else
        wildcard_.push_back(e);
    return e->rule;
}

FlowRule FlowTable::remove(std::uint64_t cookie)
{
    auto it = rules_.find(cookie);
    if (it == rules_.end())
        throw OfError(ErrorKind::RemoveNonexistentRule, fmt::format("no rule with cookie {:#x}", cookie));
    Entry* e = &it->second;
    auto drop_from = [e](std::vector<Entry*>& v) { v.erase(std::find(v.begin(), v.end(), e)); };
    if (e->rule.match.call_id) {
        auto bucket = by_call_.find(*e->rule.match.call_id);
        drop_from(bucket->second);
        if (bucket->second.empty())
            by_call_.erase(bucket);
    } else {
        drop_from(wildcard_);
    }
    FlowRule out = std::move(e->rule);
    rules_.erase(it);
    return out;
}

FlowTable::Entry* FlowTable::lookup_entry(const PacketView& v)
{
    Entry* best = nullptr;
    auto consider = [&](Entry* e) {
        if ((!best || better(e->rule, best->rule)) && matches(e->rule.match, v))
            best = e;
    };
    if (!v.call_id.empty() && !by_call_.empty()) {
        auto it = by_call_.find(std::string(v.call_id));
        if (it != by_call_.end()) {
            for (Entry* e : it->second)
                consider(e);
        }
    }
    for (Entry* e : wildcard_)
        consider(e);
    return best;
}

FlowRule* FlowTable::lookup(const PacketView& v)
{
    Entry* e = lookup_entry(v);
    return e ? &e->rule : nullptr;
}

const FlowRule* FlowTable::find(std::uint64_t cookie) const
{
    auto it = rules_.find(cookie);
    return it == rules_.end() ? nullptr : &it->second.rule;
}

std::vector<const FlowRule*> FlowTable::ordered() const
{
    std::vector<const FlowRule*> out;
    out.reserve(rules_.size());
    for (const auto& [cookie, e] : rules_)
        out.push_back(&e.rule);
    std::sort(out.begin(), out.end(), [](const FlowRule* a, const FlowRule* b) { return better(*a, *b); });
    return out;
}

bool closes_dialog(const sip::Message& msg)
{
    if (!msg.is_response())
        return false;
    if (msg.cseq.method == sip::Method::Bye)
        return msg.status().is_final();
    if (msg.cseq.method == sip::Method::Invite)
        return msg.status().code >= 300;
    return false;
}

Switch::Switch(std::string id, std::set<PortNo> ports) : id_(std::move(id)), ports_(std::move(ports)) {}

ForwardDecision Switch::process_packet(PortNo in_port, const Packet& pkt, SimTime now)
{
    if (in_port != kControllerPort && !has_port(in_port))
        throw OfError(ErrorKind::UnknownPort, fmt::format("switch {} has no port {}", id_, in_port));
    ++counters_.offered;
    if (in_port != kControllerPort) {
        auto& pc = port_counters_[in_port];
        ++pc.rx_packets;
        pc.rx_bytes += pkt.bytes;
    }

    ForwardDecision d;
    PacketView view = PacketView::of(in_port, pkt);
    FlowTable::Entry* e = table_.lookup_entry(view);
    if (!e) {
        if (miss_to_controller_) {
            ++counters_.packet_ins;
            d.kind = ForwardDecision::Kind::ToController;
        } else {
            ++counters_.drops;
            d.kind = ForwardDecision::Kind::Drop;
        }
        return d;
    }

    FlowRule& r = e->rule;
    ++r.stats.matched_packets;
    r.stats.matched_bytes += pkt.bytes;
    d.cookie = r.cookie;
    if (pkt.sip) {
        e->smoother.observe(pkt.sip->is_request(), to_millis(pkt.sent_at), to_millis(now));
        r.stats.sip_metadata = e->smoother.value();
        if (!r.stats.dialog_ended && closes_dialog(*pkt.sip)) {
            r.stats.dialog_ended = true;
            ended_.push_back(pkt.sip->call_id);
        }
    }
    std::visit(
        [&](const auto& a) {
            using A = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<A, ForwardTo>) {
                d.kind = ForwardDecision::Kind::Emit;
                d.ports = a.ports;
            } else if constexpr (std::is_same_v<A, SendToController>) {
                d.kind = ForwardDecision::Kind::ToController;
            } else {
                d.kind = ForwardDecision::Kind::Drop;
            }
        },
        r.action);
    return d;
}

void Switch::apply_flow_mod(FlowMod mod)
{
    if (mod.command == FlowMod::Command::Remove) {
        table_.remove(mod.rule.cookie);
        return;
    }
    if (const auto* fwd = std::get_if<ForwardTo>(&mod.rule.action)) {
        for (PortNo p : fwd->ports) {
            if (!has_port(p))
                throw OfError(ErrorKind::UnknownPort, fmt::format("switch {} has no port {}", id_, p));
        }
    }
    table_.add(std::move(mod.rule));
}

std::map<std::uint64_t, RuleStats> Switch::collect_stats() const
{
    std::map<std::uint64_t, RuleStats> out;
    for (const auto& [cookie, e] : table_.rules_)
        out.emplace(cookie, e.rule.stats);
    return out;
}

std::vector<std::string> Switch::take_ended_dialogs()
{
    std::vector<std::string> out;
    out.swap(ended_);
    return out;
}

void Switch::account_tx(PortNo port, std::uint32_t bytes)
{
    auto& pc = port_counters_[port];
    ++pc.tx_packets;
    pc.tx_bytes += bytes;
}

void Switch::account_other_app(PortNo port, double packets, double bytes)
{
    auto& pc = port_counters_[port];
    pc.other_app_packets += packets;
    pc.other_app_bytes += bytes;
}

const PortCounters& Switch::port_counters(PortNo port) const
{
    static const PortCounters kEmpty;
    auto it = port_counters_.find(port);
    return it == port_counters_.end() ? kEmpty : it->second;
}

namespace {

std::string describe_match(const MatchFields& m)
{
    std::vector<std::string> parts;
    if (m.in_port)
        parts.push_back(fmt::format("in_port={}", *m.in_port));
    if (m.ip_src)
        parts.push_back("ip_src=" + m.ip_src->str());
    if (m.ip_dst)
        parts.push_back("ip_dst=" + m.ip_dst->str());
    if (m.application)
        parts.push_back("app=" + *m.application);
    if (m.sip_method)
        parts.push_back(fmt::format("method={}", sip::to_string(*m.sip_method)));
    if (m.call_id)
        parts.push_back("call_id=" + *m.call_id);
    if (m.from)
        parts.push_back("from=" + *m.from);
    if (m.to)
        parts.push_back("to=" + *m.to);
    return fmt::format("{}", fmt::join(parts, ","));
}

std::string port_name(PortNo p)
{
    if (p == kTablePort)
        return "table";
    if (p == kControllerPort)
        return "controller";
    return std::to_string(p);
}

std::string describe_packet(const Packet& p)
{
    if (p.sip)
        return sip::describe(*p.sip);
    return fmt::format("{}B {}", p.bytes, p.raw.substr(0, 16));
}

}  // namespace

std::string describe(const ControllerMsg& msg)
{
    return std::visit(
        [](const auto& m) -> std::string {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, PacketIn>) {
                return fmt::format("PacketIn sw={} in_port={} {}", m.switch_id, port_name(m.in_port),
                                   describe_packet(m.packet));
            } else if constexpr (std::is_same_v<M, PacketOut>) {
                return fmt::format("PacketOut sw={} out_port={} {}", m.switch_id, port_name(m.out_port),
                                   describe_packet(m.packet));
            } else {
                if (m.command == FlowMod::Command::Remove)
                    return fmt::format("FlowMod remove sw={} cookie={:#x}", m.switch_id, m.rule.cookie);
                std::string action = std::visit(
                    [](const auto& a) -> std::string {
                        using A = std::decay_t<decltype(a)>;
                        if constexpr (std::is_same_v<A, ForwardTo>)
                            return fmt::format("output:{}", fmt::join(a.ports, "+"));
                        else if constexpr (std::is_same_v<A, SendToController>)
                            return "controller";
                        else
                            return "drop";
                    },
                    m.rule.action);
                return fmt::format("FlowMod add sw={} cookie={:#x} prio={} match={} action={}", m.switch_id,
                                   m.rule.cookie, m.rule.priority, describe_match(m.rule.match), action);
            }
        },
        msg);
}

}  // namespace opensim::of
