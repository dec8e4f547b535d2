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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "opensim/common.hpp"
#include "opensim/dpi.hpp"
#include "opensim/sip.hpp"

namespace opensim::of {

using PortNo = std::uint32_t;

// Reserved port numbers.
constexpr PortNo kTablePort = 0xfffffff9;       // PacketOut: run through the flow table
constexpr PortNo kControllerPort = 0xfffffffd;  // PacketOut arrives from the controller

struct Packet {
    std::uint64_t id = 0;
    Ipv4 ip_src;
    Ipv4 ip_dst;
    std::uint64_t eth_src = 0;
    std::uint64_t eth_dst = 0;
    std::uint16_t l4_src = 5060;
    std::uint16_t l4_dst = 5060;
    std::uint32_t bytes = 800;
    SimTime sent_at = 0;
    std::shared_ptr<const sip::Message> sip;  // null for non-SIP payloads
    std::string raw;                          // payload of non-SIP packets

    bool is_sip() const { return sip != nullptr; }
    std::string payload() const;
};

struct MatchFields {
    std::optional<PortNo> in_port;
    std::optional<std::uint64_t> eth_src;
    std::optional<std::uint64_t> eth_dst;
    std::optional<Ipv4> ip_src;
    std::optional<Ipv4> ip_dst;
    std::optional<std::uint16_t> l4_src;
    std::optional<std::uint16_t> l4_dst;
    std::optional<std::string> application;
    std::optional<sip::Method> sip_method;
    std::optional<std::string> call_id;
    std::optional<std::string> from;
    std::optional<std::string> to;

    bool all_wildcard() const;
    bool has_l7() const { return sip_method || call_id || from || to; }
    bool operator==(const MatchFields&) const = default;
};

// The packet header view the pipeline matches against, filled by DPI.
struct PacketView {
    PortNo in_port = 0;
    const Packet* pkt = nullptr;
    std::string application;
    std::optional<sip::Method> sip_method;
    std::string_view call_id;
    std::string_view from;
    std::string_view to;

    static PacketView of(PortNo in_port, const Packet& pkt);
};

bool matches(const MatchFields& m, const PacketView& v);

struct ForwardTo {
    std::vector<PortNo> ports;
    bool operator==(const ForwardTo&) const = default;
};
struct SendToController {
    bool operator==(const SendToController&) const = default;
};
struct Drop {
    bool operator==(const Drop&) const = default;
};
using Action = std::variant<ForwardTo, SendToController, Drop>;

struct RuleStats {
    std::uint64_t matched_packets = 0;
    std::uint64_t matched_bytes = 0;
    dpi::Computed sip_metadata;
    bool dialog_ended = false;  // a dialog-closing final response matched this rule
    bool operator==(const RuleStats&) const = default;
};

struct FlowRule {
    std::uint64_t cookie = 0;
    MatchFields match;
    int priority = 0;
    Action action = Drop{};
    RuleStats stats;
    std::uint64_t install_seq = 0;
};

enum class ErrorKind { UnknownPort, RemoveNonexistentRule, InvalidRule, DuplicateCookie };
using OfError = Error<ErrorKind>;

// Single flow table. Rules with an exact call_id are indexed by it; the
// rest are scanned. Lookup returns the highest priority match, earliest
// installed on ties.
class FlowTable {
public:
    FlowRule& add(FlowRule rule);
    FlowRule remove(std::uint64_t cookie);
    FlowRule* lookup(const PacketView& v);
    const FlowRule* find(std::uint64_t cookie) const;
    std::size_t size() const { return rules_.size(); }
    // Rules in (priority desc, install_seq asc) order.
    std::vector<const FlowRule*> ordered() const;

private:
    struct Entry {
        FlowRule rule;
        dpi::MetadataSmoother smoother;
    };
    friend class Switch;

    Entry* lookup_entry(const PacketView& v);

    std::uint64_t next_seq_ = 1;
    std::unordered_map<std::uint64_t, Entry> rules_;
    std::unordered_map<std::string, std::vector<Entry*>> by_call_;
    std::vector<Entry*> wildcard_;
};

struct PacketIn {
    std::string switch_id;
    PortNo in_port = 0;
    Packet packet;
};

struct PacketOut {
    std::string switch_id;
    PortNo out_port = kTablePort;
    Packet packet;
};

struct FlowMod {
    enum class Command { Add, Remove };
    std::string switch_id;
    Command command = Command::Add;
    FlowRule rule;  // for Remove only rule.cookie is used
};

using ControllerMsg = std::variant<PacketIn, PacketOut, FlowMod>;

std::string describe(const ControllerMsg& msg);

struct ForwardDecision {
    enum class Kind { Emit, ToController, Drop };
    Kind kind = Kind::Drop;
    std::span<const PortNo> ports;  // into the matched rule; valid until the table changes
    std::uint64_t cookie = 0;  // matched rule, 0 on miss
};

struct PortCounters {
    std::uint64_t rx_packets = 0;
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_packets = 0;
    std::uint64_t tx_bytes = 0;
    double other_app_packets = 0;  // non-SIP traffic seen on the port
    double other_app_bytes = 0;
};

struct SwitchCounters {
    std::uint64_t offered = 0;
    std::uint64_t packet_ins = 0;
    std::uint64_t drops = 0;
};

class Switch {
public:
    Switch(std::string id, std::set<PortNo> ports);

    const std::string& id() const { return id_; }
    const std::set<PortNo>& ports() const { return ports_; }
    bool has_port(PortNo p) const { return ports_.count(p) > 0; }
    void add_port(PortNo p) { ports_.insert(p); }
    // Without a controller, table misses are dropped.
    void set_miss_to_controller(bool on) { miss_to_controller_ = on; }

    // Runs DPI and the table on one packet. kControllerPort is accepted as
    // the ingress of a PacketOut resubmitted through the table.
    ForwardDecision process_packet(PortNo in_port, const Packet& pkt, SimTime now);
    void apply_flow_mod(FlowMod mod);

    std::map<std::uint64_t, RuleStats> collect_stats() const;
    // Call-IDs whose closing response matched a rule since the last call.
    std::vector<std::string> take_ended_dialogs();

    void account_tx(PortNo port, std::uint32_t bytes);
    void account_other_app(PortNo port, double packets, double bytes);
    const PortCounters& port_counters(PortNo port) const;
    const SwitchCounters& counters() const { return counters_; }
    const FlowTable& table() const { return table_; }

private:
    std::string id_;
    std::set<PortNo> ports_;
    FlowTable table_;
    SwitchCounters counters_;
    std::unordered_map<PortNo, PortCounters> port_counters_;
    std::vector<std::string> ended_;
    bool miss_to_controller_ = true;
};

bool closes_dialog(const sip::Message& msg);

}  // namespace opensim::of
