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

#include "opensim/world.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <memory>
#include <optional>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "opensim/balancer.hpp"
#include "opensim/dpi.hpp"
#include "opensim/engine.hpp"
#include "opensim/nfv.hpp"
#include "opensim/openflow.hpp"
#include "opensim/topology.hpp"

namespace opensim::harness {
namespace {

enum : std::uint32_t {
    kDeliver = sim::kUser,
    kSend,
    kArrival,
    kTick,
    kSample,
    kCtlIn,
    kCtlDone,
    kCtlPoll,
    kCtlOut,
    kTelemetry,
    kScaleEval,
    kNfvMsg,
    kHangup,
    kRegister,
};

// Messages between the controller and the orchestrator.
enum : std::uint32_t {
    kScaleOut = 1,
    kScaleIn,
    kVmRegistered,
    kVmDraining,
    kVmRetired,
    kScaleRefused,
};

constexpr double kTickS = 0.1;

class World;

class Node : public sim::Entity {
public:
    Node(World& w, std::string name) : w_(w), name_(std::move(name)) {}
    const std::string& name() const { return name_; }
    sim::EntityId eid = 0;

protected:
    World& w_;
    std::string name_;
};

struct Attachment {
    sim::Link* link = nullptr;
    int dir = 0;
    Node* peer = nullptr;
    of::PortNo peer_port = 0;
};

class HostNode : public Node {
public:
    using Node::Node;
    Ipv4 ip;
    Attachment up;
    std::string sw;
    of::PortNo port = 0;

    void on_event(sim::Engine& e, const sim::Event& ev) override;
    void send(sip::Message msg, Ipv4 dst, SimTime at);

protected:
    // binds sip:<name>@<domain> to this host at the service address
    void send_register();
    virtual void receive(of::Packet pkt) = 0;
    virtual void handle(sim::Engine&, const sim::Event&) {}
};

class SwitchNode : public Node {
public:
    SwitchNode(World& w, std::string name, double delay_ms, std::uint16_t index)
        : Node(w, name), sw(name, {}), delay(millis(delay_ms)), index(index)
    {
    }
    of::Switch sw;
    SimTime delay;
    std::uint16_t index;
    std::map<of::PortNo, Attachment> ports;
    of::PortNo next_port = 1;

    void on_event(sim::Engine& e, const sim::Event& ev) override;
};

class UacNode;
class UasNode;
class ProxyNode;
class BalancerNode;
class ControllerNode;
class NfvoNode;

class World : public ctl::DiscoveryFabric {
public:
    World(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts);
    ~World() override;

    RunResult run();

    // plumbing shared by the entities
    struct Flight {
        of::Packet pkt;
        of::PortNo in_port = 0;
    };
    struct CtlItem {
        of::ControllerMsg msg;
        SimTime at = 0;
    };

    std::uint64_t park(of::Packet pkt, of::PortNo in_port);
    Flight take(std::uint64_t slot);
    std::uint64_t park_ctl(of::ControllerMsg m, SimTime at);
    CtlItem take_ctl(std::uint64_t slot);

    of::Packet make_packet(Ipv4 src, Ipv4 dst, sip::Message msg);
    void transmit(const Attachment& a, of::Packet pkt, SimTime at);
    void host_transmit(HostNode& h, of::Packet pkt);
    void switch_receive(SwitchNode& s, of::PortNo in_port, of::Packet pkt);
    void switch_emit(SwitchNode& s, of::PortNo port, of::Packet pkt, SimTime at);
    void switch_control(SwitchNode& s, of::ControllerMsg m);
    void to_controller(of::ControllerMsg m, SimTime at);
    // one delivery event per switch, message order kept
    void to_switches(std::vector<of::ControllerMsg> msgs, SimTime at);
    std::vector<of::ControllerMsg> take_batch(std::uint64_t slot);
    void delivered(const HostNode& h, const of::Packet& pkt);

    bool tracing() const { return eng.tracing(); }
    void trace(std::string_view entity, std::string_view kind, std::string_view summary)
    {
        eng.trace(entity, kind, summary);
    }

    ProxyNode& launch_vm(const nfv::VirtualMachine& vm);
    sim::EntityId controller_eid() const;
    sim::EntityId nfvo_eid() const;
    const CtlItem& peek_ctl(std::uint64_t slot) const;
    void note_hop(const of::Packet& pkt, std::uint16_t sw);
    void set_access_background(ProxyNode& p, double bytes_per_s);
    void sample();

    // DiscoveryFabric
    std::vector<std::string> switches() const override;
    std::set<of::PortNo> ports(const std::string& sw) const override;
    std::pair<double, double> port_properties(const std::string& sw, of::PortNo port) const override;
    std::optional<ctl::ProbeReply> probe(const std::string& sw, of::PortNo port,
                                         const std::string& payload) override;

    sim::Engine eng;
    const ScenarioConfig& cfg;
    std::uint64_t seed;
    RunOptions opts;
    SimTime end = 0;
    SimTime channel = 0;

    std::vector<std::unique_ptr<sim::Link>> links;
    std::vector<std::pair<std::string, sim::Link*>> named_links;
    std::vector<std::unique_ptr<SwitchNode>> switch_nodes;
    std::map<std::string, SwitchNode*> switch_by_name;
    std::unique_ptr<UacNode> uac;
    std::vector<std::unique_ptr<UasNode>> uas;
    std::vector<std::unique_ptr<ProxyNode>> proxies;
    std::vector<std::unique_ptr<BalancerNode>> balancers;
    std::unique_ptr<ControllerNode> controller;
    std::unique_ptr<NfvoNode> nfvo;
    std::map<std::string, HostNode*> hosts_by_name;

    RunResult result;

private:
    void build_topology();
    Attachment attach(HostNode& h, const std::string& sw, double mbps, double delay_ms);
    void install_static_routes();

    std::vector<Flight> pool_;
    std::vector<std::uint64_t> free_;
    std::vector<CtlItem> ctl_pool_;
    std::vector<std::uint64_t> ctl_free_;
    std::vector<std::vector<of::ControllerMsg>> batch_pool_;
    std::vector<std::uint64_t> batch_free_;
    std::uint64_t next_packet_id_ = 1;
    std::unordered_map<std::uint64_t, std::vector<std::uint16_t>> hops_;
    std::vector<std::string> switch_names_;
    Ipv4 callee_ip_;

    class Sampler : public Node {
    public:
        using Node::Node;
        void on_event(sim::Engine& e, const sim::Event&) override;
    };
    std::unique_ptr<Sampler> sampler_;
};

// ---------------------------------------------------------------- callers

class UacNode : public HostNode {
public:
    UacNode(World& w, const HostSpec& spec)
        : HostNode(w, spec.id),
          stream_(w.cfg.profile(), w.seed),
          domain_(w.cfg.domain),
          callee_(spec.callee),
          registers_(spec.registers && w.cfg.mode == RunMode::Full)
    {
    }

    void start(std::string callee_default)
    {
        if (callee_.empty())
            callee_ = std::move(callee_default);
        callee_uri_ = fmt::format("sip:{}@{}", callee_, domain_);
        caller_uri_ = fmt::format("sip:{}@{}", name_, domain_);
        if (registers_)
            w_.eng.schedule(0, eid, kRegister);
        schedule_next();
        w_.eng.schedule(seconds(kTickS), eid, kTick);
    }

    struct Interval {
        std::uint64_t offered = 0;
        std::uint64_t completed = 0;
        std::uint64_t rejected = 0;
        std::uint64_t dropped = 0;
        double setup_sum = 0;
        std::uint64_t setups = 0;
    };
    Interval take_interval()
    {
        Interval out = interval_;
        interval_ = {};
        return out;
    }
    const CallTotals& totals() const { return totals_; }
    std::uint64_t open_calls() const
    {
        return totals_.generated - totals_.completed - totals_.rejected - totals_.dropped;
    }

protected:
    enum class Phase : std::uint8_t { Inviting, Established, Closing, Done };
    struct Call {
        SimTime start = 0;
        Ipv4 target;
        Phase phase = Phase::Inviting;
        std::string to_tag;
    };

    void schedule_next()
    {
        if (auto t = stream_.next())
            w_.eng.schedule(*t, eid, kArrival);
    }

    std::string call_id(std::size_t n) const { return "c" + std::to_string(n); }

    sip::Message request(sip::Method m, std::size_t n, std::uint32_t seq) const
    {
        auto msg = sip::make_request(m, callee_uri_, call_id(n), seq);
        msg.via.push_back({ip.str(), 5060});
        msg.from = {caller_uri_, "t" + std::to_string(n)};
        msg.to = {callee_uri_, calls_[n].to_tag};
        msg.contact = sip::HostPort{ip.str(), 5060};
        return msg;
    }

    void new_call()
    {
        const std::size_t n = calls_.size();
        Call c;
        c.start = w_.eng.now();
        const auto& cfg = w_.cfg;
        if (cfg.mode == RunMode::Baseline)
            c.target = cfg.balancers[fnv1a(call_id(n)) % cfg.balancers.size()].ip;
        else
            c.target = cfg.service_ip;
        calls_.push_back(c);
        ++totals_.generated;
        ++interval_.offered;
        deadlines_.push_back({w_.eng.now() + seconds(cfg.call_timeout_s), n});
        send(request(sip::Method::Invite, n, 1), c.target, w_.eng.now());
    }

    void hang_up(std::size_t n)
    {
        Call& c = calls_[n];
        if (c.phase != Phase::Established)
            return;
        c.phase = Phase::Closing;
        deadlines_.push_back({w_.eng.now() + seconds(w_.cfg.call_timeout_s), n});
        send(request(sip::Method::Bye, n, 2), c.target, w_.eng.now());
    }

    void resolve(Call& c, std::uint64_t& total, std::uint64_t& in_interval)
    {
        c.phase = Phase::Done;
        ++total;
        ++in_interval;
    }

    void receive(of::Packet pkt) override
    {
        const sip::Message& msg = *pkt.sip;
        if (msg.is_request() || msg.call_id.size() < 2 || msg.call_id[0] != 'c')
            return;
        std::size_t n = 0;
        auto [p, ec] = std::from_chars(msg.call_id.data() + 1, msg.call_id.data() + msg.call_id.size(), n);
        if (ec != std::errc() || n >= calls_.size())
            return;
        Call& c = calls_[n];
        const int code = msg.status().code;
        if (msg.cseq.method == sip::Method::Invite) {
            if (c.phase != Phase::Inviting || code < 200)
                return;
            if (code >= 300) {
                resolve(c, totals_.rejected, interval_.rejected);
                return;
            }
            const double setup = to_millis(w_.eng.now() - c.start);
            totals_.setup_ms_sum += setup;
            ++totals_.setups;
            interval_.setup_sum += setup;
            ++interval_.setups;
            c.phase = Phase::Established;
            c.to_tag = msg.to.tag;
            send(request(sip::Method::Ack, n, 1), c.target, w_.eng.now());
            if (w_.cfg.hold_s > 0)
                w_.eng.schedule_in(seconds(w_.cfg.hold_s), eid, kHangup, n);
            else
                hang_up(n);
        } else if (msg.cseq.method == sip::Method::Bye && code >= 200 && c.phase == Phase::Closing) {
            resolve(c, totals_.completed, interval_.completed);
        }
    }

    void handle(sim::Engine& e, const sim::Event& ev) override
    {
        switch (ev.kind) {
        case kArrival:
            new_call();
            schedule_next();
            break;
        case kHangup:
            hang_up(ev.arg);
            break;
        case kRegister:
            send_register();
            break;
        case kTick:
            expire();
            if (e.now() + seconds(kTickS) <= w_.end)
                e.schedule_in(seconds(kTickS), eid, kTick);
            break;
        default:
            break;
        }
    }

    void expire()
    {
        const SimTime now = w_.eng.now();
        // deadlines are pushed in time order: both timeouts have the same length
        while (!deadlines_.empty() && deadlines_.front().first <= now) {
            auto [t, n] = deadlines_.front();
            deadlines_.pop_front();
            Call& c = calls_[n];
            if (c.phase == Phase::Done)
                continue;
            // an Established call waiting out its hold time has its own later deadline
            if (c.phase == Phase::Established && w_.cfg.hold_s > 0)
                continue;
            if (w_.tracing())
                w_.trace(name_, "timeout", fmt::format("cid={} ", call_id(n)));
            resolve(c, totals_.dropped, interval_.dropped);
        }
    }

    sim::ArrivalStream stream_;
    std::string domain_;
    std::string callee_;
    std::string callee_uri_;
    std::string caller_uri_;
    bool registers_;
    std::vector<Call> calls_;
    std::deque<std::pair<SimTime, std::size_t>> deadlines_;
    CallTotals totals_;
    Interval interval_;
};

class UasNode : public HostNode {
public:
    UasNode(World& w, const HostSpec& spec) : HostNode(w, spec.id), registers_(spec.registers && w.cfg.mode == RunMode::Full) {}

    void start()
    {
        if (registers_)
            w_.eng.schedule(0, eid, kRegister);
    }

protected:
    void receive(of::Packet pkt) override
    {
        const sip::Message& msg = *pkt.sip;
        if (!msg.is_request() || msg.via.empty())
            return;
        Ipv4 back;
        if (!Ipv4::try_parse(msg.via.front().host, back))
            return;
        const SimTime now = w_.eng.now();
        switch (msg.request().method) {
        case sip::Method::Invite:
            send(sip::make_response(msg, sip::StatusCode(180)), back, now);
            send(sip::make_response(msg, sip::StatusCode(200)), back, now);
            break;
        case sip::Method::Bye:
        case sip::Method::Options:
            send(sip::make_response(msg, sip::StatusCode(200)), back, now);
            break;
        default:
            break;
        }
    }

    void handle(sim::Engine&, const sim::Event& ev) override
    {
        if (ev.kind == kRegister)
            send_register();
    }

    bool registers_;
};

// ---------------------------------------------------------------- proxies

class ProxyNode : public HostNode {
public:
    ProxyNode(World& w, proxy::ProxyConfig pc, std::size_t index)
        : HostNode(w, pc.id), px(std::move(pc)), index(index)
    {
    }

    proxy::Proxy px;
    std::size_t index;
    bool retired = false;
    double link_background = 0;  // bytes/s toward the proxy while it is up
    std::uint64_t dropped = 0;

    void start(SimTime at) { w_.eng.schedule(at, eid, kTick); }

protected:
    void receive(of::Packet pkt) override;
    void handle(sim::Engine& e, const sim::Event& ev) override;
};

class BalancerNode : public HostNode {
public:
    BalancerNode(World& w, lb::BalancerConfig bc) : HostNode(w, bc.id), lb(std::move(bc)) {}

    lb::Balancer lb;
    bool available = true;

    void start() { w_.eng.schedule(seconds(kTickS), eid, kTick); }

protected:
    void receive(of::Packet pkt) override
    {
        if (!available)
            return;
        auto oc = lb.process_message(*pkt.sip, pkt.ip_src, w_.eng.now());
        for (auto& em : oc.out)
            send(std::move(em.msg), em.dst, w_.eng.now() + oc.service_time);
    }

    void handle(sim::Engine& e, const sim::Event& ev) override
    {
        switch (ev.kind) {
        case kTick:
            lb.resource_tick(e.now());
            if (e.now() + seconds(kTickS) <= w_.end)
                e.schedule_in(seconds(kTickS), eid, kTick);
            break;
        case sim::kFail:
            available = false;
            w_.trace(name_, "fail", "");
            break;
        case sim::kRecover:
            available = true;
            w_.trace(name_, "recover", "");
            break;
        default:
            break;
        }
    }
};

// ---------------------------------------------------------------- controller

class ControllerNode : public Node {
public:
    ControllerNode(World& w, ctl::ControllerConfig cc, const ControllerSpec& spec)
        : Node(w, "controller"),
          ctl(std::move(cc)),
          spec_(spec),
          res_(spec.capacity, 1.0, spec.window_s, spec.poll_s, spec.inflation_cap)
    {
    }

    ctl::Controller ctl;
    std::vector<std::string> vm_order;  // registered VMs, launch order

    void start()
    {
        w_.eng.schedule(seconds(spec_.poll_s), eid, kCtlPoll);
        if (ctl.mode() == ctl::Mode::Nfv)
            w_.eng.schedule(seconds(w_.cfg.nfv.interval_s), eid, kScaleEval);
    }

    struct Interval {
        std::uint64_t handled = 0;
        std::uint64_t rejects = 0;
        double latency_sum = 0;
    };
    Interval take_interval()
    {
        Interval out = interval_;
        interval_ = {};
        return out;
    }
    double cpu() const { return res_.cpu(); }
    std::uint64_t handled() const { return handled_; }

    void on_event(sim::Engine& e, const sim::Event& ev) override;

private:
    void begin_service();
    void finish_service(std::uint64_t slot);
    void poll();
    void scale_eval();
    void on_orchestrator(std::uint64_t arg);
    void send_all(std::vector<of::ControllerMsg> msgs, SimTime at);

    ControllerSpec spec_;
    proxy::ResourceModel res_;
    dpi::IngressQueues<std::uint64_t> queue_;
    bool busy_ = false;
    std::vector<std::string> ending_;
    bool scale_pending_ = false;
    std::uint64_t handled_ = 0;
    Interval interval_;
};

// ---------------------------------------------------------------- orchestrator

class NfvoNode : public Node {
public:
    NfvoNode(World& w, std::vector<nfv::PhysicalMachine> pms, double reservation)
        : Node(w, "nfvo"), orch(std::move(pms), reservation)
    {
    }

    nfv::Orchestrator orch;
    std::map<std::string, ProxyNode*> vm_nodes;

    ProxyNode& boot()
    {
        auto vm = orch.scale_out();
        ProxyNode& node = w_.launch_vm(vm);
        vm_nodes[vm.id] = &node;
        log("scale_out", vm.id, vm.pm);
        return node;
    }

    void start() { w_.eng.schedule(seconds(kTickS), eid, kTick); }

    void on_event(sim::Engine& e, const sim::Event& ev) override
    {
        const SimTime ch = w_.channel;
        if (ev.kind == kNfvMsg) {
            try {
                if (ev.arg == kScaleOut) {
                    ProxyNode& node = boot();
                    e.schedule(e.now() + seconds(w_.cfg.nfv.boot_delay_s) + ch, w_.controller_eid(),
                               kNfvMsg, pack(kVmRegistered, node.index));
                } else if (ev.arg == kScaleIn) {
                    auto id = orch.scale_in();
                    log("drain", id, orch.find(id)->pm);
                    e.schedule(e.now() + ch, w_.controller_eid(), kNfvMsg,
                               pack(kVmDraining, vm_nodes.at(id)->index));
                }
            } catch (const nfv::NfvError& err) {
                w_.trace(name_, "refused", err.what());
                e.schedule(e.now() + ch, w_.controller_eid(), kNfvMsg, pack(kScaleRefused, 0));
            }
        } else if (ev.kind == kTick) {
            for (const auto* vm : orch.draining()) {
                ProxyNode* node = vm_nodes.at(vm->id);
                if (node->px.dialogs() > 0)
                    continue;
                std::string id = vm->id;
                std::string pm = vm->pm;
                orch.retire(id);
                node->retired = true;
                log("retire", id, pm);
                e.schedule(e.now() + ch, w_.controller_eid(), kNfvMsg, pack(kVmRetired, node->index));
                break;  // the draining() view is stale after retire
            }
            if (e.now() + seconds(kTickS) <= w_.end)
                e.schedule_in(seconds(kTickS), eid, kTick);
        }
    }

    static std::uint64_t pack(std::uint32_t kind, std::size_t index)
    {
        return (static_cast<std::uint64_t>(kind) << 32) | index;
    }

private:
    void log(std::string action, std::string vm, std::string pm)
    {
        w_.result.orchestration.push_back(
            {to_seconds(w_.eng.now()), action, vm, pm, orch.fleet_size()});
        if (w_.tracing())
            w_.trace(name_, action, fmt::format("vm={} pm={} fleet={}", vm, pm, orch.fleet_size()));
    }
};

// ---------------------------------------------------------------- node bodies

void HostNode::on_event(sim::Engine& e, const sim::Event& ev)
{
    if (ev.kind == kDeliver) {
        auto f = w_.take(ev.arg);
        w_.delivered(*this, f.pkt);
        if (f.pkt.sip)
            receive(std::move(f.pkt));
    } else if (ev.kind == kSend) {
        auto f = w_.take(ev.arg);
        w_.host_transmit(*this, std::move(f.pkt));
    } else {
        handle(e, ev);
    }
}

void HostNode::send_register()
{
    const auto& domain = w_.cfg.domain;
    auto msg = sip::make_request(sip::Method::Register, fmt::format("sip:{}", domain), fmt::format("reg-{}", name_), 1);
    msg.via.push_back({ip.str(), 5060});
    msg.from = {fmt::format("sip:{}@{}", name_, domain), fmt::format("r{}", name_)};
    msg.to = {fmt::format("sip:{}@{}", name_, domain), ""};
    msg.contact = sip::HostPort{ip.str(), 5060};
    send(std::move(msg), w_.cfg.service_ip, w_.eng.now());
}

void HostNode::send(sip::Message msg, Ipv4 dst, SimTime at)
{
    of::Packet pkt = w_.make_packet(ip, dst, std::move(msg));
    if (at <= w_.eng.now()) {
        w_.host_transmit(*this, std::move(pkt));
        return;
    }
    w_.eng.schedule(at, eid, kSend, w_.park(std::move(pkt), 0));
}

void SwitchNode::on_event(sim::Engine&, const sim::Event& ev)
{
    if (ev.kind == kDeliver) {
        auto f = w_.take(ev.arg);
        w_.switch_receive(*this, f.in_port, std::move(f.pkt));
    } else if (ev.kind == kCtlOut) {
        for (auto& m : w_.take_batch(ev.arg))
            w_.switch_control(*this, std::move(m));
    }
}

void ProxyNode::receive(of::Packet pkt)
{
    if (!px.available() || retired) {
        ++dropped;
        if (w_.tracing())
            w_.trace(name_, "drop", sip::describe(*pkt.sip));
        return;
    }
    const SimTime now = w_.eng.now();
    auto oc = px.process_message(*pkt.sip, pkt.ip_src, now);
    for (auto& em : oc.out)
        send(std::move(em.msg), em.dst, now + oc.service_time);
}

void ProxyNode::handle(sim::Engine& e, const sim::Event& ev)
{
    switch (ev.kind) {
    case kTick: {
        if (retired)
            return;
        const SimTime now = e.now();
        px.resource_tick(now);
        const double bg = px.background();
        if (bg > 0) {
            auto* sw = w_.switch_by_name.at(this->sw);
            sw->sw.account_other_app(port, bg * kTickS, bg * kTickS * w_.cfg.background_bytes);
        }
        if (px.available() && w_.controller)
            e.schedule(now + w_.channel, w_.controller_eid(), kTelemetry, index);
        if (now + seconds(kTickS) <= w_.end)
            e.schedule_in(seconds(kTickS), eid, kTick);
        break;
    }
    case sim::kFail:
        px.set_availability(false, e.now());
        w_.set_access_background(*this, 0);
        w_.trace(name_, "fail", "");
        break;
    case sim::kRecover:
        px.set_availability(true, e.now());
        w_.set_access_background(*this, link_background);
        w_.trace(name_, "recover", "");
        break;
    default:
        break;
    }
}


void ControllerNode::on_event(sim::Engine& e, const sim::Event& ev)
{
    switch (ev.kind) {
    case kCtlIn: {
        const auto& item = w_.peek_ctl(ev.arg);
        const auto& in = std::get<of::PacketIn>(item.msg);
        if (w_.tracing())
            w_.trace(name_, "recv", of::describe(item.msg));
        queue_.push(in.packet.sip ? dpi::enqueue(*in.packet.sip) : dpi::Queue::Rest, ev.arg);
        begin_service();
        break;
    }
    case kCtlDone:
        busy_ = false;
        finish_service(ev.arg);
        begin_service();
        break;
    case kCtlPoll:
        poll();
        if (e.now() + seconds(spec_.poll_s) <= w_.end)
            e.schedule_in(seconds(spec_.poll_s), eid, kCtlPoll);
        break;
    case kTelemetry: {
        auto& p = *w_.proxies.at(ev.arg);
        if (!p.retired && ctl.estimator().known(p.name()))
            ctl.estimator().on_telemetry(p.name(), p.px.cpu(), p.px.mem(), e.now());
        break;
    }
    case kScaleEval:
        scale_eval();
        if (e.now() + seconds(w_.cfg.nfv.interval_s) <= w_.end)
            e.schedule_in(seconds(w_.cfg.nfv.interval_s), eid, kScaleEval);
        break;
    case kNfvMsg:
        on_orchestrator(ev.arg);
        break;
    default:
        break;
    }
}

void ControllerNode::begin_service()
{
    if (busy_)
        return;
    auto slot = queue_.pop();
    if (!slot)
        return;
    const auto& in = std::get<of::PacketIn>(w_.peek_ctl(*slot).msg);
    const bool full_invite =
        ctl.mode() == ctl::Mode::Full && in.packet.sip && in.packet.sip->is_request(sip::Method::Invite);
    const double cost = full_invite ? spec_.invite_cost : 1.0;
    const SimTime now = w_.eng.now();
    res_.charge(cost, now);
    busy_ = true;
    auto st = std::max<SimTime>(1, static_cast<SimTime>(std::llround(cost / spec_.capacity * 1e6)));
    w_.eng.schedule(now + st, eid, kCtlDone, *slot);
}

void ControllerNode::finish_service(std::uint64_t slot)
{
    auto item = w_.take_ctl(slot);
    auto in = std::get<of::PacketIn>(std::move(item.msg));
    const SimTime now = w_.eng.now();
    ++handled_;
    ++interval_.handled;

    const sip::Message* msg = in.packet.sip.get();
    const bool invite = msg && msg->is_request(sip::Method::Invite);
    std::vector<of::ControllerMsg> out;
    if (invite && ctl.mode() == ctl::Mode::Full && res_.cpu() >= 100.0 && !ctl.session(msg->call_id)) {
        out.emplace_back(ctl.reject(in, 503));
        ++interval_.rejects;
    } else {
        try {
            out = ctl.handle_packet_in(in, now);
        } catch (const ctl::CtlError& err) {
            if (invite && err.kind() == ctl::ErrorKind::UnknownCallee) {
                out.emplace_back(ctl.reject(in, 404));
                ++interval_.rejects;
            } else if (invite && err.kind() == ctl::ErrorKind::NoReachableProxy) {
                out.emplace_back(ctl.reject(in, 503));
                ++interval_.rejects;
            } else if (w_.tracing()) {
                w_.trace(name_, "drop", err.what());
            }
        }
    }
    if (w_.opts.audit && invite) {
        if (const auto* rec = ctl.session(msg->call_id))
            w_.result.segments[msg->call_id] = rec->segments;
    }
    const double delay_ms = spec_.latency_ms * proxy::inflation(res_.cpu(), spec_.inflation_cap);
    const SimTime emit = now + millis(delay_ms);
    interval_.latency_sum += to_millis(emit - item.at);
    send_all(std::move(out), emit);
}

void ControllerNode::send_all(std::vector<of::ControllerMsg> msgs, SimTime at)
{
    if (w_.tracing()) {
        for (const auto& m : msgs)
            w_.trace(name_, "send", of::describe(m));
    }
    w_.to_switches(std::move(msgs), at + w_.channel);
}

void ControllerNode::poll()
{
    const SimTime now = w_.eng.now();
    std::vector<of::ControllerMsg> mods;
    // sessions flagged one poll ago; the grace period lets the closing
    // response finish its path before the rules go away
    for (const auto& cid : ending_) {
        if (!ctl.session(cid))
            continue;
        for (auto& m : ctl.terminate_session(cid))
            mods.emplace_back(std::move(m));
    }
    ending_.clear();
    for (const auto& s : w_.switch_nodes) {
        auto ended = s->sw.take_ended_dialogs();
        ending_.insert(ending_.end(), ended.begin(), ended.end());
    }

    auto& est = ctl.estimator();
    for (const auto& p : w_.proxies) {
        if (p->retired || !est.known(p->name()))
            continue;
        const auto* sw = w_.switch_by_name.at(p->sw);
        est.on_port_sample(p->name(), sw->sw.port_counters(p->port).other_app_packets, now);
    }
    for (const auto& id : est.newly_unreachable(now)) {
        if (w_.tracing())
            w_.trace(name_, "unreachable", id);
        for (auto& m : ctl.teardown_proxy(id))
            mods.emplace_back(std::move(m));
    }
    res_.tick(now, 0);
    send_all(std::move(mods), now);
}

void ControllerNode::scale_eval()
{
    if (scale_pending_)
        return;
    const SimTime now = w_.eng.now();
    auto view = ctl.load_view(now);
    std::vector<double> utils;
    for (const auto& id : vm_order) {
        const auto* p = view.find(id);
        utils.push_back(p ? p->cpu : 0.0);
    }
    nfv::ScalingPolicy policy{w_.cfg.nfv.scale_out, w_.cfg.nfv.scale_in, w_.cfg.nfv.interval_s};
    auto action = nfv::evaluate_scaling(utils, policy);
    if (action == nfv::ScaleAction::None)
        return;
    scale_pending_ = true;
    if (w_.tracing())
        w_.trace(name_, "scale_request", fmt::format("{} fleet={}", nfv::to_string(action), vm_order.size()));
    w_.eng.schedule(now + w_.channel, w_.nfvo_eid(), kNfvMsg,
                    action == nfv::ScaleAction::Out ? kScaleOut : kScaleIn);
}

void ControllerNode::on_orchestrator(std::uint64_t arg)
{
    const auto kind = static_cast<std::uint32_t>(arg >> 32);
    const auto index = static_cast<std::size_t>(arg & 0xffffffffu);
    const SimTime now = w_.eng.now();
    switch (kind) {
    case kVmRegistered: {
        auto& p = *w_.proxies.at(index);
        auto topo = ctl.topology();
        topo.attach_host({p.name(), p.ip, p.sw, p.port});
        ctl.set_topology(std::move(topo));
        ctl.add_proxy(p.name(), w_.cfg.nfv.vm_capacity, now);
        vm_order.push_back(p.name());
        scale_pending_ = false;
        break;
    }
    case kVmDraining: {
        const auto& id = w_.proxies.at(index)->name();
        ctl.estimator().set_draining(id, true);
        vm_order.erase(std::remove(vm_order.begin(), vm_order.end(), id), vm_order.end());
        scale_pending_ = false;
        break;
    }
    case kVmRetired:
        ctl.remove_proxy(w_.proxies.at(index)->name());
        break;
    case kScaleRefused:
        scale_pending_ = false;
        break;
    default:
        break;
    }
}

// ---------------------------------------------------------------- world

World::World(const ScenarioConfig& c, std::uint64_t s, const RunOptions& o) : cfg(c), seed(s), opts(o)
{
    eng.set_trace(opts.trace);
    end = cfg.duration_s > 0 ? seconds(cfg.duration_s + cfg.drain_s) : 0;
    channel = millis(cfg.controller.channel_ms);
    build_topology();
}

World::~World() = default;

sim::EntityId World::controller_eid() const { return controller->eid; }

sim::EntityId World::nfvo_eid() const { return nfvo->eid; }

std::uint64_t World::park(of::Packet pkt, of::PortNo in_port)
{
    if (free_.empty()) {
        pool_.push_back({std::move(pkt), in_port});
        return pool_.size() - 1;
    }
    auto slot = free_.back();
    free_.pop_back();
    pool_[slot] = {std::move(pkt), in_port};
    return slot;
}

World::Flight World::take(std::uint64_t slot)
{
    Flight f = std::move(pool_[slot]);
    pool_[slot].pkt.sip.reset();
    free_.push_back(slot);
    return f;
}

std::uint64_t World::park_ctl(of::ControllerMsg m, SimTime at)
{
    if (ctl_free_.empty()) {
        ctl_pool_.push_back({std::move(m), at});
        return ctl_pool_.size() - 1;
    }
    auto slot = ctl_free_.back();
    ctl_free_.pop_back();
    ctl_pool_[slot] = {std::move(m), at};
    return slot;
}

const World::CtlItem& World::peek_ctl(std::uint64_t slot) const { return ctl_pool_[slot]; }

World::CtlItem World::take_ctl(std::uint64_t slot)
{
    CtlItem item = std::move(ctl_pool_[slot]);
    ctl_pool_[slot].msg = of::PacketOut{};
    ctl_free_.push_back(slot);
    return item;
}

of::Packet World::make_packet(Ipv4 src, Ipv4 dst, sip::Message msg)
{
    of::Packet p;
    p.id = next_packet_id_++;
    p.ip_src = src;
    p.ip_dst = dst;
    p.bytes = cfg.message_bytes;
    p.sent_at = eng.now();
    p.sip = std::make_shared<const sip::Message>(std::move(msg));
    return p;
}

void World::transmit(const Attachment& a, of::Packet pkt, SimTime at)
{
    const SimTime arrival = a.link->transmit(a.dir, at, pkt.bytes);
    eng.schedule(arrival, a.peer->eid, kDeliver, park(std::move(pkt), a.peer_port));
}

void World::host_transmit(HostNode& h, of::Packet pkt)
{
    if (tracing())
        trace(h.name(), "send", fmt::format("{} dst={}", sip::describe(*pkt.sip), pkt.ip_dst.str()));
    if (opts.audit)
        hops_[pkt.id].clear();
    transmit(h.up, std::move(pkt), eng.now());
}

void World::note_hop(const of::Packet& pkt, std::uint16_t sw)
{
    if (!opts.audit)
        return;
    auto& h = hops_[pkt.id];
    if (h.empty() || h.back() != sw)
        h.push_back(sw);
}

void World::switch_receive(SwitchNode& s, of::PortNo in_port, of::Packet pkt)
{
    const SimTime now = eng.now();
    auto d = s.sw.process_packet(in_port, pkt, now);
    note_hop(pkt, s.index);
    switch (d.kind) {
    case of::ForwardDecision::Kind::Emit:
        if (tracing())
            trace(s.name(), "fwd",
                  fmt::format("{} in={} out={}", pkt.sip ? sip::describe(*pkt.sip) : std::string("raw"),
                              in_port == of::kControllerPort ? std::string("controller") : std::to_string(in_port),
                              fmt::join(d.ports, "+")));
        for (std::size_t i = 0; i < d.ports.size(); ++i) {
            if (i + 1 == d.ports.size())
                switch_emit(s, d.ports[i], std::move(pkt), now + s.delay);
            else
                switch_emit(s, d.ports[i], pkt, now + s.delay);
        }
        break;
    case of::ForwardDecision::Kind::ToController:
        if (tracing())
            trace(s.name(), "miss", pkt.sip ? sip::describe(*pkt.sip) : std::string("raw"));
        to_controller(of::PacketIn{s.name(), in_port, std::move(pkt)}, now + s.delay + channel);
        break;
    case of::ForwardDecision::Kind::Drop:
        if (tracing())
            trace(s.name(), "drop", pkt.sip ? sip::describe(*pkt.sip) : std::string("raw"));
        break;
    }
}

void World::switch_emit(SwitchNode& s, of::PortNo port, of::Packet pkt, SimTime at)
{
    auto it = s.ports.find(port);
    if (it == s.ports.end())
        return;
    s.sw.account_tx(port, pkt.bytes);
    transmit(it->second, std::move(pkt), at);
}

void World::switch_control(SwitchNode& s, of::ControllerMsg m)
{
    if (auto* mod = std::get_if<of::FlowMod>(&m)) {
        try {
            s.sw.apply_flow_mod(std::move(*mod));
        } catch (const of::OfError& err) {
            if (tracing())
                trace(s.name(), "reject", err.what());
        }
        return;
    }
    if (auto* out = std::get_if<of::PacketOut>(&m)) {
        if (out->out_port == of::kTablePort) {
            switch_receive(s, of::kControllerPort, std::move(out->packet));
            return;
        }
        note_hop(out->packet, s.index);
        if (tracing())
            trace(s.name(), "fwd",
                  fmt::format("{} in=controller out={}",
                              out->packet.sip ? sip::describe(*out->packet.sip) : std::string("raw"), out->out_port));
        switch_emit(s, out->out_port, std::move(out->packet), eng.now() + s.delay);
    }
}

void World::to_controller(of::ControllerMsg m, SimTime at)
{
    eng.schedule(at, controller->eid, kCtlIn, park_ctl(std::move(m), at));
}

void World::to_switches(std::vector<of::ControllerMsg> msgs, SimTime at)
{
    std::vector<std::pair<SwitchNode*, std::uint64_t>> groups;
    for (auto& m : msgs) {
        const std::string* sw = nullptr;
        if (auto* out = std::get_if<of::PacketOut>(&m)) {
            if (out->packet.id == 0)
                out->packet.id = next_packet_id_++;
            sw = &out->switch_id;
        } else if (auto* mod = std::get_if<of::FlowMod>(&m)) {
            sw = &mod->switch_id;
        } else {
            continue;
        }
        auto it = switch_by_name.find(*sw);
        if (it == switch_by_name.end())
            continue;
        auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& x) { return x.first == it->second; });
        if (g == groups.end()) {
            std::uint64_t slot;
            if (batch_free_.empty()) {
                slot = batch_pool_.size();
                batch_pool_.emplace_back();
            } else {
                slot = batch_free_.back();
                batch_free_.pop_back();
            }
            groups.emplace_back(it->second, slot);
            g = groups.end() - 1;
        }
        batch_pool_[g->second].push_back(std::move(m));
    }
    for (const auto& [node, slot] : groups)
        eng.schedule(at, node->eid, kCtlOut, slot);
}

std::vector<of::ControllerMsg> World::take_batch(std::uint64_t slot)
{
    std::vector<of::ControllerMsg> out;
    out.swap(batch_pool_[slot]);
    batch_free_.push_back(slot);
    return out;
}

void World::delivered(const HostNode& h, const of::Packet& pkt)
{
    if (!opts.audit || !pkt.sip)
        return;
    AuditRecord rec;
    rec.call_id = pkt.sip->call_id;
    rec.message = sip::describe(*pkt.sip);
    rec.receiver = h.name();
    if (auto it = hops_.find(pkt.id); it != hops_.end()) {
        for (auto i : it->second)
            rec.hops.push_back(switch_names_[i]);
        hops_.erase(it);
    }
    result.audit.push_back(std::move(rec));
}

void World::set_access_background(ProxyNode& p, double bytes_per_s)
{
    p.up.link->set_background(1, bytes_per_s);
}

Attachment World::attach(HostNode& h, const std::string& sw, double mbps, double delay_ms)
{
    SwitchNode* s = switch_by_name.at(sw);
    const of::PortNo port = s->next_port++;
    s->sw.add_port(port);
    links.push_back(std::make_unique<sim::Link>(mbps, delay_ms, seconds(cfg.sampling_s)));
    sim::Link* link = links.back().get();
    h.up = {link, 0, s, port};
    h.sw = sw;
    h.port = port;
    s->ports[port] = {link, 1, &h, 0};
    named_links.emplace_back(fmt::format("{}-{}", sw, h.name()), link);
    hosts_by_name[h.name()] = &h;
    return h.up;
}

void World::build_topology()
{
    std::uint16_t index = 0;
    for (const auto& s : cfg.switches) {
        auto node = std::make_unique<SwitchNode>(*this, s.id, s.delay_ms, index++);
        node->eid = eng.add_entity(s.id, node.get());
        node->sw.set_miss_to_controller(cfg.mode != RunMode::Baseline);
        switch_by_name[s.id] = node.get();
        switch_names_.push_back(s.id);
        switch_nodes.push_back(std::move(node));
    }
    for (const auto& l : cfg.links) {
        SwitchNode* a = switch_by_name.at(l.a);
        SwitchNode* b = switch_by_name.at(l.b);
        links.push_back(std::make_unique<sim::Link>(l.mbps, l.delay_ms, seconds(cfg.sampling_s)));
        sim::Link* link = links.back().get();
        const of::PortNo pa = a->next_port++;
        const of::PortNo pb = b->next_port++;
        a->sw.add_port(pa);
        b->sw.add_port(pb);
        a->ports[pa] = {link, 0, b, pb};
        b->ports[pb] = {link, 1, a, pa};
        named_links.emplace_back(fmt::format("{}-{}", l.a, l.b), link);
    }

    Ipv4 callee_ip;
    for (const auto& h : cfg.hosts) {
        HostNode* node = nullptr;
        if (h.role == HostRole::Uac) {
            uac = std::make_unique<UacNode>(*this, h);
            node = uac.get();
        } else {
            uas.push_back(std::make_unique<UasNode>(*this, h));
            node = uas.back().get();
            if (callee_ip.is_unset())
                callee_ip = h.ip;
        }
        node->ip = h.ip;
        node->eid = eng.add_entity(h.id, node);
        attach(*node, h.sw, h.mbps, h.delay_ms);
    }
    callee_ip_ = callee_ip;

    // Only what the mode uses is built, so one preset can carry every stack.
    const bool static_proxies = cfg.mode == RunMode::Partial || cfg.mode == RunMode::Baseline;
    for (const auto& p : static_proxies ? cfg.proxies : std::vector<ProxySpec>{}) {
        proxy::ProxyConfig pc;
        pc.id = p.id;
        pc.ip = p.ip;
        pc.via_host = cfg.mode == RunMode::Baseline ? p.ip.str() : cfg.service_ip.str();
        pc.capacity_cps = p.capacity;
        pc.background_pps = p.background;
        pc.default_route = callee_ip;
        auto node = std::make_unique<ProxyNode>(*this, pc, proxies.size());
        node->ip = p.ip;
        node->eid = eng.add_entity(p.id, node.get());
        attach(*node, p.sw, p.mbps, p.delay_ms);
        node->link_background = p.background * cfg.background_bytes;
        set_access_background(*node, node->link_background);
        proxies.push_back(std::move(node));
    }

    for (const auto& b : cfg.mode == RunMode::Baseline ? cfg.balancers : std::vector<BalancerSpec>{}) {
        lb::BalancerConfig bc;
        bc.id = b.id;
        bc.ip = b.ip;
        bc.capacity_cps = b.capacity;
        bc.dispatch.algorithm = cfg.balancer;
        for (const auto& p : cfg.proxies)
            bc.proxies.emplace_back(p.id, p.ip);
        auto node = std::make_unique<BalancerNode>(*this, bc);
        node->ip = b.ip;
        node->eid = eng.add_entity(b.id, node.get());
        attach(*node, b.sw, b.mbps, b.delay_ms);
        balancers.push_back(std::move(node));
    }

    if (cfg.mode == RunMode::Nfv) {
        std::vector<nfv::PhysicalMachine> pms;
        for (const auto& p : cfg.pms)
            pms.push_back({p.id, p.cores, {}, 0});
        nfvo = std::make_unique<NfvoNode>(*this, std::move(pms), cfg.nfv.vm_reservation);
        nfvo->eid = eng.add_entity("nfvo", nfvo.get());
        for (int i = 0; i < cfg.nfv.initial_vms; ++i)
            nfvo->boot();
    }

    if (cfg.mode != RunMode::Baseline) {
        ctl::ControllerConfig cc;
        cc.mode = cfg.mode == RunMode::Full ? ctl::Mode::Full
                  : cfg.mode == RunMode::Nfv ? ctl::Mode::Nfv
                                             : ctl::Mode::Partial;
        cc.strategy = cfg.strategy;
        cc.seed = seed * 0x9e3779b97f4a7c15ull + 1;
        cc.fill = cfg.fill;
        cc.service_ip = cfg.service_ip;
        cc.weight = cfg.controller.weight;
        cc.message_bytes = cfg.message_bytes;
        cc.estimator.window_s = cfg.controller.window_s;
        cc.estimator.poll_interval_s = cfg.controller.poll_s;
        cc.estimator.staleness_polls = cfg.controller.staleness;
        controller = std::make_unique<ControllerNode>(*this, cc, cfg.controller);
        controller->eid = eng.add_entity("controller", controller.get());
        controller->ctl.set_topology(ctl::discover_topology(*this));
        if (cfg.mode == RunMode::Nfv) {
            for (const auto* vm : nfvo->orch.running()) {
                controller->ctl.add_proxy(vm->id, cfg.nfv.vm_capacity, 0);
                controller->vm_order.push_back(vm->id);
            }
        } else if (cfg.mode == RunMode::Partial) {
            for (const auto& p : cfg.proxies)
                controller->ctl.add_proxy(p.id, p.capacity, 0);
        }
    } else {
        install_static_routes();
    }

    sampler_ = std::make_unique<Sampler>(*this, "sampler");
    sampler_->eid = eng.add_entity("sampler", sampler_.get());
}

ProxyNode& World::launch_vm(const nfv::VirtualMachine& vm)
{
    const auto& pm = cfg.pms.at(static_cast<std::size_t>(vm.pm_index - 1));
    proxy::ProxyConfig pc;
    pc.id = vm.id;
    pc.ip = Ipv4::parse(fmt::format("10.1.{}.{}", vm.pm_index, vm.slot));
    pc.via_host = cfg.service_ip.str();
    pc.capacity_cps = cfg.nfv.vm_capacity;
    pc.default_route = callee_ip_;
    auto node = std::make_unique<ProxyNode>(*this, pc, proxies.size());
    node->ip = pc.ip;
    std::string entity = vm.id;
    if (eng.find_entity(entity))
        entity = fmt::format("{}.{}", vm.id, vm.launch_seq);
    node->eid = eng.add_entity(entity, node.get());
    attach(*node, pm.sw, pm.mbps, pm.delay_ms);
    node->start(eng.now() + seconds(kTickS));
    proxies.push_back(std::move(node));
    return *proxies.back();
}

void World::install_static_routes()
{
    auto topo = ctl::discover_topology(*this);
    std::uint64_t cookie = 1;
    for (const auto& sw : switch_names_) {
        for (const auto& [name, h] : topo.hosts()) {
            auto path = ctl::shortest_path(topo, sw, h.sw);
            of::PortNo port = path.size() > 1 ? *topo.port_toward(sw, path[1]) : h.port;
            of::FlowMod mod;
            mod.switch_id = sw;
            mod.rule.cookie = cookie++;
            mod.rule.priority = 10;
            mod.rule.match.ip_dst = h.ip;
            mod.rule.action = of::ForwardTo{{port}};
            switch_by_name.at(sw)->sw.apply_flow_mod(mod);
        }
    }
}

std::vector<std::string> World::switches() const { return switch_names_; }

std::set<of::PortNo> World::ports(const std::string& sw) const { return switch_by_name.at(sw)->sw.ports(); }

std::pair<double, double> World::port_properties(const std::string& sw, of::PortNo port) const
{
    const auto& a = switch_by_name.at(sw)->ports.at(port);
    return {a.link->mbps(), to_millis(a.link->propagation())};
}

std::optional<ctl::ProbeReply> World::probe(const std::string& sw, of::PortNo port, const std::string& payload)
{
    const auto& a = switch_by_name.at(sw)->ports.at(port);
    ctl::ProbeReply r;
    if (auto* peer = dynamic_cast<SwitchNode*>(a.peer)) {
        r.kind = ctl::ProbeReply::Kind::Switch;
        r.switch_id = peer->name();
        r.in_port = a.peer_port;
        r.payload = payload;
        return r;
    }
    if (auto* host = dynamic_cast<HostNode*>(a.peer)) {
        r.kind = ctl::ProbeReply::Kind::Host;
        r.host = host->name();
        r.ip = host->ip;
        return r;
    }
    return std::nullopt;
}

void World::Sampler::on_event(sim::Engine& e, const sim::Event&)
{
    w_.sample();
    const SimTime step = seconds(w_.cfg.sampling_s);
    if (e.now() + step <= w_.end)
        e.schedule_in(step, eid, kSample);
}

void World::sample()
{
    const double t = to_seconds(eng.now());
    const double s = cfg.sampling_s;
    if (controller) {
        auto iv = controller->take_interval();
        MetricsRow r;
        r.time = t;
        r.entity = "controller";
        r.kind = "controller";
        r.throughput = static_cast<double>(iv.handled) / s;
        r.resp_ms = iv.handled ? iv.latency_sum / static_cast<double>(iv.handled) : 0.0;
        r.cpu = controller->cpu();
        r.mem = std::min(100.0, 10.0 + 0.01 * static_cast<double>(controller->ctl.sessions().size()));
        r.rejects = iv.rejects;
        result.rows.push_back(std::move(r));
    }
    for (const auto& p : proxies) {
        if (p->retired)
            continue;
        auto iv = p->px.take_interval();
        MetricsRow r;
        r.time = t;
        r.entity = p->name();
        r.kind = "proxy";
        r.throughput = static_cast<double>(iv.completed) / s;
        r.resp_ms = iv.responses ? iv.response_ms_sum / static_cast<double>(iv.responses) : 0.0;
        r.cpu = p->px.cpu();
        r.mem = p->px.mem();
        r.rejects = iv.rejected;
        result.rows.push_back(std::move(r));
    }
    for (const auto& b : balancers) {
        auto iv = b->lb.take_interval();
        MetricsRow r;
        r.time = t;
        r.entity = b->name();
        r.kind = "balancer";
        r.throughput = static_cast<double>(iv.completed) / s;
        r.resp_ms = iv.responses ? iv.response_ms_sum / static_cast<double>(iv.responses) : 0.0;
        r.cpu = b->lb.cpu();
        r.rejects = iv.rejected;
        result.rows.push_back(std::move(r));
    }
    if (cfg.link_metrics) {
        const auto k = static_cast<std::size_t>(std::llround(t / s)) - 1;
        for (const auto& [name, link] : named_links) {
            MetricsRow r;
            r.time = t;
            r.entity = name;
            r.kind = "link";
            r.util = std::max(link->utilization(0, k), link->utilization(1, k));
            result.rows.push_back(std::move(r));
        }
    }
    auto iv = uac->take_interval();
    SystemRow sr;
    sr.time = t;
    sr.offered = static_cast<double>(iv.offered) / s;
    sr.completed = static_cast<double>(iv.completed) / s;
    sr.rejected = static_cast<double>(iv.rejected) / s;
    sr.dropped = static_cast<double>(iv.dropped) / s;
    sr.setup_ms = iv.setups ? iv.setup_sum / static_cast<double>(iv.setups) : 0.0;
    sr.fleet = nfvo ? nfvo->orch.fleet_size() : proxies.size();
    result.system.push_back(sr);
}

RunResult World::run()
{
    if (end == 0)
        return std::move(result);
    uac->start(cfg.hosts.empty() ? std::string() : [&] {
        for (const auto& h : cfg.hosts) {
            if (h.role == HostRole::Uas)
                return h.id;
        }
        return std::string();
    }());
    for (auto& u : uas)
        u->start();
    for (auto& p : proxies)
        p->start(seconds(kTickS));
    for (auto& b : balancers)
        b->start();
    if (controller)
        controller->start();
    if (nfvo)
        nfvo->start();
    eng.schedule(seconds(cfg.sampling_s), sampler_->eid, kSample);
    sim::inject_failure(eng, cfg.failures);

    auto stats = eng.run_until(end);
    result.events = stats.events;
    result.calls = uac->totals();
    result.calls.in_progress = uac->open_calls();
    if (controller) {
        result.controller = controller->ctl.counters();
        result.controller_handled = controller->handled();
    }
    for (const auto& p : proxies) {
        auto& t = result.proxies[p->name()];
        const auto& x = p->px.totals();
        t.processed += x.processed;
        t.received += x.received;
        t.admitted += x.admitted;
        t.rejected += x.rejected;
        t.completed += x.completed;
        t.dropped_on_failure += x.dropped_on_failure;
    }
    return std::move(result);
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts)
{
    try {
        World w(cfg, seed, opts);
        return w.run();
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        throw RunError(RunErrorKind::Runtime, e.what());
    }
}

std::vector<std::string> flow_continuity_violations(const RunResult& r)
{
    std::vector<std::string> out;
    for (const auto& rec : r.audit) {
        auto it = r.segments.find(rec.call_id);
        if (it == r.segments.end() || rec.hops.empty())
            continue;
        bool ok = false;
        for (const auto& seg : it->second) {
            auto start = std::find(seg.begin(), seg.end(), rec.hops.front());
            if (start == seg.end())
                continue;
            auto idx = static_cast<std::size_t>(start - seg.begin());
            if (idx + rec.hops.size() <= seg.size() &&
                std::equal(rec.hops.begin(), rec.hops.end(), seg.begin() + static_cast<std::ptrdiff_t>(idx))) {
                ok = true;
                break;
            }
        }
        if (!ok)
            out.push_back(fmt::format("{} to {} crossed {}", rec.message, rec.receiver, fmt::join(rec.hops, ">")));
    }
    return out;
}

}  // namespace opensim::harness
