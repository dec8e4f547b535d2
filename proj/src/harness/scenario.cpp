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

#include "opensim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "opensim/presets.hpp"

namespace opensim::harness {

std::string_view to_string(RunMode m)
{
    switch (m) {
    case RunMode::Partial: return "partial";
    case RunMode::Full: return "full";
    case RunMode::Nfv: return "nfv";
    case RunMode::Baseline: return "baseline";
    }
    return "?";
}

std::optional<RunMode> run_mode_from_string(std::string_view s)
{
    for (auto m : {RunMode::Partial, RunMode::Full, RunMode::Nfv, RunMode::Baseline}) {
        if (to_string(m) == s)
            return m;
    }
    return std::nullopt;
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const
{
    auto seg_eq = [](const sim::Segment& a, const sim::Segment& b) {
        return a.start_s == b.start_s && a.end_s == b.end_s && a.rate_cps == b.rate_cps;
    };
    auto fail_eq = [](const sim::FailureEntry& a, const sim::FailureEntry& b) {
        return a.entity == b.entity && a.fail_s == b.fail_s && a.recover_s == b.recover_s;
    };
    return name == o.name && mode == o.mode && balancer == o.balancer && strategy == o.strategy &&
           fill == o.fill && duration_s == o.duration_s && drain_s == o.drain_s && seed == o.seed &&
           sampling_s == o.sampling_s && hold_s == o.hold_s && call_timeout_s == o.call_timeout_s &&
           message_bytes == o.message_bytes && background_bytes == o.background_bytes &&
           link_metrics == o.link_metrics && arrival == o.arrival && service_ip == o.service_ip &&
           domain == o.domain && controller == o.controller && nfv == o.nfv && switches == o.switches &&
           links == o.links && hosts == o.hosts && proxies == o.proxies && balancers == o.balancers &&
           pms == o.pms && std::equal(segments.begin(), segments.end(), o.segments.begin(), o.segments.end(), seg_eq) &&
           std::equal(failures.begin(), failures.end(), o.failures.begin(), o.failures.end(), fail_eq);
}

const HostSpec* ScenarioConfig::uac() const
{
    for (const auto& h : hosts) {
        if (h.role == HostRole::Uac)
            return &h;
    }
    return nullptr;
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void parse_fail(int line, const std::string& what)
{
    throw ScenarioError(ErrorKind::ParseError, fmt::format("line {}: {}", line, what), line);
}

double to_double(std::string_view v, int line)
{
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        parse_fail(line, fmt::format("'{}' is not a number", v));
    return out;
}

std::uint64_t to_uint(std::string_view v, int line)
{
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        parse_fail(line, fmt::format("'{}' is not a non-negative integer", v));
    return out;
}

bool to_bool(std::string_view v, int line)
{
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    parse_fail(line, fmt::format("'{}' is not a boolean", v));
}

Ipv4 to_ip(std::string_view v, int line)
{
    Ipv4 ip;
    if (!Ipv4::try_parse(v, ip))
        parse_fail(line, fmt::format("'{}' is not an IPv4 address", v));
    return ip;
}

struct Field {
    std::string_view key;
    std::string_view value;
    int line;
};

class Assigner {
public:
    explicit Assigner(const Field& f) : f_(f) {}

    bool num(std::string_view key, double& out)
    {
        if (f_.key != key)
            return false;
        out = to_double(f_.value, f_.line);
        return true;
    }
    template <typename Int>
    bool integer(std::string_view key, Int& out)
    {
        if (f_.key != key)
            return false;
        out = static_cast<Int>(to_uint(f_.value, f_.line));
        return true;
    }
    bool str(std::string_view key, std::string& out)
    {
        if (f_.key != key)
            return false;
        out = std::string(f_.value);
        return true;
    }
    bool flag(std::string_view key, bool& out)
    {
        if (f_.key != key)
            return false;
        out = to_bool(f_.value, f_.line);
        return true;
    }
    bool ip(std::string_view key, Ipv4& out)
    {
        if (f_.key != key)
            return false;
        out = to_ip(f_.value, f_.line);
        return true;
    }
    [[noreturn]] void unknown(std::string_view section) const
    {
        parse_fail(f_.line, fmt::format("unknown key '{}' in [{}]", f_.key, section));
    }
    const Field& field() const { return f_; }

private:
    const Field& f_;
};

void set_scenario(ScenarioConfig& c, const Field& f)
{
    Assigner a(f);
    if (a.str("name", c.name) || a.num("fill", c.fill) || a.num("duration", c.duration_s) ||
        a.num("drain", c.drain_s) || a.integer("seed", c.seed) || a.num("sampling", c.sampling_s) ||
        a.num("hold", c.hold_s) || a.num("call_timeout", c.call_timeout_s) ||
        a.integer("message_bytes", c.message_bytes) || a.integer("background_bytes", c.background_bytes) ||
        a.flag("link_metrics", c.link_metrics) || a.ip("service_ip", c.service_ip) || a.str("domain", c.domain))
        return;
    if (f.key == "mode") {
        auto m = run_mode_from_string(f.value);
        if (!m)
            parse_fail(f.line, fmt::format("unknown mode '{}'", f.value));
        c.mode = *m;
    } else if (f.key == "balancer") {
        auto b = lb::algorithm_from_string(f.value);
        if (!b)
            parse_fail(f.line, fmt::format("unknown balancer algorithm '{}'", f.value));
        c.balancer = *b;
    } else if (f.key == "strategy") {
        auto s = ctl::strategy_from_string(f.value);
        if (!s)
            parse_fail(f.line, fmt::format("unknown strategy '{}'", f.value));
        c.strategy = *s;
    } else if (f.key == "arrival") {
        if (f.value == "deterministic")
            c.arrival = sim::ArrivalProcess::Deterministic;
        else if (f.value == "poisson")
            c.arrival = sim::ArrivalProcess::Poisson;
        else
            parse_fail(f.line, fmt::format("unknown arrival process '{}'", f.value));
    } else {
        a.unknown("scenario");
    }
}

void set_controller(ControllerSpec& c, const Field& f)
{
    Assigner a(f);
    if (a.num("capacity", c.capacity) || a.num("latency_ms", c.latency_ms) || a.num("channel_ms", c.channel_ms) ||
        a.num("poll", c.poll_s) || a.num("invite_cost", c.invite_cost) || a.integer("staleness", c.staleness) ||
        a.num("window", c.window_s) || a.num("inflation_cap", c.inflation_cap))
        return;
    if (f.key == "weight") {
        if (f.value == "hops")
            c.weight = ctl::EdgeWeight::Hops;
        else if (f.value == "latency")
            c.weight = ctl::EdgeWeight::Latency;
        else
            parse_fail(f.line, fmt::format("unknown edge weight '{}'", f.value));
        return;
    }
    a.unknown("controller");
}

void set_nfv(NfvSpec& n, const Field& f)
{
    Assigner a(f);
    if (a.num("vm_capacity", n.vm_capacity) || a.num("scale_out", n.scale_out) || a.num("scale_in", n.scale_in) ||
        a.num("interval", n.interval_s) || a.num("boot_delay", n.boot_delay_s) ||
        a.num("vm_reservation", n.vm_reservation) || a.integer("initial_vms", n.initial_vms))
        return;
    a.unknown("nfv");
}

void set_switch(SwitchSpec& s, const Field& f)
{
    Assigner a(f);
    if (a.str("id", s.id) || a.num("delay_ms", s.delay_ms))
        return;
    a.unknown("switch");
}

void set_link(LinkSpec& l, const Field& f)
{
    Assigner a(f);
    if (a.str("a", l.a) || a.str("b", l.b) || a.num("mbps", l.mbps) || a.num("delay_ms", l.delay_ms))
        return;
    a.unknown("link");
}

void set_host(HostSpec& h, const Field& f)
{
    Assigner a(f);
    if (a.str("id", h.id) || a.ip("ip", h.ip) || a.str("switch", h.sw) || a.num("mbps", h.mbps) ||
        a.num("delay_ms", h.delay_ms) || a.flag("register", h.registers) || a.str("callee", h.callee))
        return;
    if (f.key == "role") {
        if (f.value == "uac")
            h.role = HostRole::Uac;
        else if (f.value == "uas")
            h.role = HostRole::Uas;
        else
            parse_fail(f.line, fmt::format("unknown host role '{}'", f.value));
        return;
    }
    a.unknown("host");
}

void set_proxy(ProxySpec& p, const Field& f)
{
    Assigner a(f);
    if (a.str("id", p.id) || a.ip("ip", p.ip) || a.str("switch", p.sw) || a.num("capacity", p.capacity) ||
        a.num("background", p.background) || a.num("mbps", p.mbps) || a.num("delay_ms", p.delay_ms))
        return;
    a.unknown("proxy");
}

void set_balancer(BalancerSpec& b, const Field& f)
{
    Assigner a(f);
    if (a.str("id", b.id) || a.ip("ip", b.ip) || a.str("switch", b.sw) || a.num("capacity", b.capacity) ||
        a.num("mbps", b.mbps) || a.num("delay_ms", b.delay_ms))
        return;
    a.unknown("balancer");
}

void set_pm(PmSpec& p, const Field& f)
{
    Assigner a(f);
    if (a.str("id", p.id) || a.str("switch", p.sw) || a.num("cores", p.cores) || a.num("mbps", p.mbps) ||
        a.num("delay_ms", p.delay_ms))
        return;
    a.unknown("pm");
}

void set_segment(sim::Segment& s, const Field& f)
{
    Assigner a(f);
    if (a.num("start", s.start_s) || a.num("end", s.end_s) || a.num("rate", s.rate_cps))
        return;
    a.unknown("segment");
}

void set_failure(sim::FailureEntry& e, const Field& f)
{
    Assigner a(f);
    if (a.str("entity", e.entity) || a.num("fail", e.fail_s) || a.num("recover", e.recover_s))
        return;
    a.unknown("failure");
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text)
{
    ScenarioConfig c;
    std::string section;
    int line_no = 0;
    std::set<std::string> singletons_seen;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (auto hash = line.find_first_of("#;"); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                parse_fail(line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section == "scenario" || section == "controller" || section == "nfv") {
                if (!singletons_seen.insert(section).second)
                    parse_fail(line_no, fmt::format("section [{}] appears twice", section));
            } else if (section == "switch") {
                c.switches.emplace_back();
            } else if (section == "link") {
                c.links.emplace_back();
            } else if (section == "host") {
                c.hosts.emplace_back();
            } else if (section == "proxy") {
                c.proxies.emplace_back();
            } else if (section == "balancer") {
                c.balancers.emplace_back();
            } else if (section == "pm") {
                c.pms.emplace_back();
            } else if (section == "segment") {
                c.segments.emplace_back();
            } else if (section == "failure") {
                c.failures.emplace_back();
            } else {
                parse_fail(line_no, fmt::format("unknown section [{}]", section));
            }
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            parse_fail(line_no, "expected 'key = value'");
        Field f{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
        if (f.key.empty())
            parse_fail(line_no, "empty key");

        if (section.empty())
            parse_fail(line_no, "key outside of any section");
        else if (section == "scenario")
            set_scenario(c, f);
        else if (section == "controller")
            set_controller(c.controller, f);
        else if (section == "nfv")
            set_nfv(c.nfv, f);
        else if (section == "switch")
            set_switch(c.switches.back(), f);
        else if (section == "link")
            set_link(c.links.back(), f);
        else if (section == "host")
            set_host(c.hosts.back(), f);
        else if (section == "proxy")
            set_proxy(c.proxies.back(), f);
        else if (section == "balancer")
            set_balancer(c.balancers.back(), f);
        else if (section == "pm")
            set_pm(c.pms.back(), f);
        else if (section == "segment")
            set_segment(c.segments.back(), f);
        else if (section == "failure")
            set_failure(c.failures.back(), f);
    }
    return c;
}

namespace {

[[noreturn]] void invalid(const std::string& what)
{
    throw ScenarioError(ErrorKind::InvariantViolation, what);
}

[[noreturn]] void unknown_ref(const std::string& what, const std::string& name)
{
    throw ScenarioError(ErrorKind::UnknownReference, fmt::format("{} '{}' is not defined", what, name));
}

}  // namespace

void validate(const ScenarioConfig& c)
{
    std::set<std::string> names;
    std::set<std::string> switch_ids;
    auto claim = [&](const std::string& id, std::string_view what) {
        if (id.empty())
            invalid(fmt::format("a {} has no id", what));
        if (!names.insert(id).second)
            invalid(fmt::format("id '{}' is defined more than once", id));
    };
    for (const auto& s : c.switches) {
        claim(s.id, "switch");
        switch_ids.insert(s.id);
        if (s.delay_ms < 0)
            invalid(fmt::format("switch {} has a negative delay", s.id));
    }
    auto need_switch = [&](const std::string& sw) {
        if (!switch_ids.count(sw))
            unknown_ref("switch", sw);
    };
    auto check_link = [&](std::string_view who, double mbps, double delay) {
        if (!(mbps > 0) || delay < 0)
            invalid(fmt::format("{} needs mbps > 0 and delay_ms >= 0", who));
    };

    std::map<std::string, std::set<std::string>> adj;
    for (const auto& l : c.links) {
        need_switch(l.a);
        need_switch(l.b);
        if (l.a == l.b)
            invalid(fmt::format("link {}-{} loops back on itself", l.a, l.b));
        check_link(fmt::format("link {}-{}", l.a, l.b), l.mbps, l.delay_ms);
        adj[l.a].insert(l.b);
        adj[l.b].insert(l.a);
    }

    std::set<std::uint32_t> ips{c.service_ip.value()};
    auto claim_ip = [&](Ipv4 ip, const std::string& who) {
        if (ip.is_unset())
            invalid(fmt::format("{} has no ip", who));
        if (!ips.insert(ip.value()).second)
            invalid(fmt::format("ip {} of {} is already in use", ip.str(), who));
    };
    std::set<std::string> attached_switches;
    int uacs = 0;
    int uases = 0;
    for (const auto& h : c.hosts) {
        claim(h.id, "host");
        need_switch(h.sw);
        claim_ip(h.ip, h.id);
        check_link(h.id, h.mbps, h.delay_ms);
        attached_switches.insert(h.sw);
        (h.role == HostRole::Uac ? uacs : uases)++;
    }
    for (const auto& p : c.proxies) {
        claim(p.id, "proxy");
        need_switch(p.sw);
        claim_ip(p.ip, p.id);
        check_link(p.id, p.mbps, p.delay_ms);
        attached_switches.insert(p.sw);
        if (!(p.capacity > 0) || p.background < 0)
            invalid(fmt::format("proxy {} needs capacity > 0 and background >= 0", p.id));
    }
    for (const auto& b : c.balancers) {
        claim(b.id, "balancer");
        need_switch(b.sw);
        claim_ip(b.ip, b.id);
        check_link(b.id, b.mbps, b.delay_ms);
        attached_switches.insert(b.sw);
        if (!(b.capacity > 0))
            invalid(fmt::format("balancer {} needs capacity > 0", b.id));
    }
    for (const auto& p : c.pms) {
        claim(p.id, "pm");
        need_switch(p.sw);
        check_link(p.id, p.mbps, p.delay_ms);
        attached_switches.insert(p.sw);
        if (!(p.cores > 0))
            invalid(fmt::format("pm {} needs cores > 0", p.id));
    }
    if (uacs != 1)
        invalid(fmt::format("exactly one uac host is required, found {}", uacs));
    if (uases < 1)
        invalid("at least one uas host is required");

    // every switch with an attachment must be reachable from the uac's switch
    if (!attached_switches.empty()) {
        std::set<std::string> seen{c.uac()->sw};
        std::vector<std::string> stack{c.uac()->sw};
        while (!stack.empty()) {
            auto s = stack.back();
            stack.pop_back();
            for (const auto& n : adj[s]) {
                if (seen.insert(n).second)
                    stack.push_back(n);
            }
        }
        for (const auto& s : attached_switches) {
            if (!seen.count(s))
                invalid(fmt::format("switch {} is not connected to the caller", s));
        }
    }

    switch (c.mode) {
    case RunMode::Partial:
        if (c.proxies.empty())
            invalid("partial mode needs at least one proxy");
        break;
    case RunMode::Baseline:
        if (c.proxies.empty() || c.balancers.empty())
            invalid("baseline mode needs proxies and at least one balancer");
        break;
    case RunMode::Nfv:
        if (c.pms.empty())
            invalid("nfv mode needs at least one pm");
        if (c.nfv.initial_vms < 1)
            invalid("nfv mode needs initial_vms >= 1");
        if (!(c.nfv.vm_capacity > 0) || !(c.nfv.vm_reservation > 0))
            invalid("nfv vm_capacity and vm_reservation must be positive");
        if (!(0 < c.nfv.scale_in && c.nfv.scale_in < c.nfv.scale_out && c.nfv.scale_out < 100))
            invalid("nfv thresholds must satisfy 0 < scale_in < scale_out < 100");
        if (!(c.nfv.interval_s > 0) || c.nfv.boot_delay_s < 0)
            invalid("nfv interval must be positive and boot_delay non-negative");
        break;
    case RunMode::Full:
        break;
    }

    if (c.duration_s < 0 || c.drain_s < 0 || !(c.sampling_s > 0) || c.hold_s < 0 || !(c.call_timeout_s > 0))
        invalid("duration/drain/hold must be >= 0 and sampling/call_timeout > 0");
    if (!(c.fill > 0 && c.fill <= 1))
        invalid("fill must be in (0, 1]");
    if (c.message_bytes == 0)
        invalid("message_bytes must be positive");
    if (!(c.controller.capacity > 0) || c.controller.latency_ms < 0 || c.controller.channel_ms < 0 ||
        !(c.controller.poll_s > 0) || !(c.controller.window_s > 0) || c.controller.staleness < 1)
        invalid("controller parameters out of range");

    try {
        c.profile().validate();
    } catch (const sim::SimError& e) {
        invalid(e.what());
    }
    if (c.profile().end_s() > c.duration_s + 1e-9)
        invalid(fmt::format("duration {} s does not cover the load profile ending at {} s", c.duration_s,
                            c.profile().end_s()));

    std::set<std::string> failable;
    for (const auto& p : c.proxies)
        failable.insert(p.id);
    for (const auto& b : c.balancers)
        failable.insert(b.id);
    for (const auto& f : c.failures) {
        if (!failable.count(f.entity))
            unknown_ref("failure target", f.entity);
        if (f.fail_s < 0 || f.recover_s <= f.fail_s)
            invalid(fmt::format("failure of {} must recover after it fails", f.entity));
    }
}

namespace {

std::string_view weight_name(ctl::EdgeWeight w)
{
    return w == ctl::EdgeWeight::Hops ? "hops" : "latency";
}

}  // namespace

std::string print_scenario(const ScenarioConfig& c)
{
    std::string out;
    auto kv = [&](std::string_view k, const auto& v) { out += fmt::format("{} = {}\n", k, v); };
    out += "[scenario]\n";
    kv("name", c.name);
    kv("mode", to_string(c.mode));
    kv("balancer", lb::to_string(c.balancer));
    kv("strategy", ctl::to_string(c.strategy));
    kv("fill", c.fill);
    kv("duration", c.duration_s);
    kv("drain", c.drain_s);
    kv("seed", c.seed);
    kv("sampling", c.sampling_s);
    kv("hold", c.hold_s);
    kv("call_timeout", c.call_timeout_s);
    kv("message_bytes", c.message_bytes);
    kv("background_bytes", c.background_bytes);
    kv("link_metrics", c.link_metrics ? "true" : "false");
    kv("arrival", c.arrival == sim::ArrivalProcess::Poisson ? "poisson" : "deterministic");
    kv("service_ip", c.service_ip.str());
    kv("domain", c.domain);

    out += "\n[controller]\n";
    kv("capacity", c.controller.capacity);
    kv("latency_ms", c.controller.latency_ms);
    kv("channel_ms", c.controller.channel_ms);
    kv("poll", c.controller.poll_s);
    kv("invite_cost", c.controller.invite_cost);
    kv("staleness", c.controller.staleness);
    kv("window", c.controller.window_s);
    kv("weight", weight_name(c.controller.weight));
    kv("inflation_cap", c.controller.inflation_cap);

    out += "\n[nfv]\n";
    kv("vm_capacity", c.nfv.vm_capacity);
    kv("scale_out", c.nfv.scale_out);
    kv("scale_in", c.nfv.scale_in);
    kv("interval", c.nfv.interval_s);
    kv("boot_delay", c.nfv.boot_delay_s);
    kv("vm_reservation", c.nfv.vm_reservation);
    kv("initial_vms", c.nfv.initial_vms);

    for (const auto& s : c.switches) {
        out += "\n[switch]\n";
        kv("id", s.id);
        kv("delay_ms", s.delay_ms);
    }
    for (const auto& l : c.links) {
        out += "\n[link]\n";
        kv("a", l.a);
        kv("b", l.b);
        kv("mbps", l.mbps);
        kv("delay_ms", l.delay_ms);
    }
    for (const auto& h : c.hosts) {
        out += "\n[host]\n";
        kv("id", h.id);
        kv("role", h.role == HostRole::Uac ? "uac" : "uas");
        kv("ip", h.ip.str());
        kv("switch", h.sw);
        kv("mbps", h.mbps);
        kv("delay_ms", h.delay_ms);
        kv("register", h.registers ? "true" : "false");
        if (!h.callee.empty())
            kv("callee", h.callee);
    }
    for (const auto& p : c.proxies) {
        out += "\n[proxy]\n";
        kv("id", p.id);
        kv("ip", p.ip.str());
        kv("switch", p.sw);
        kv("capacity", p.capacity);
        kv("background", p.background);
        kv("mbps", p.mbps);
        kv("delay_ms", p.delay_ms);
    }
    for (const auto& b : c.balancers) {
        out += "\n[balancer]\n";
        kv("id", b.id);
        kv("ip", b.ip.str());
        kv("switch", b.sw);
        kv("capacity", b.capacity);
        kv("mbps", b.mbps);
        kv("delay_ms", b.delay_ms);
    }
    for (const auto& p : c.pms) {
        out += "\n[pm]\n";
        kv("id", p.id);
        kv("switch", p.sw);
        kv("cores", p.cores);
        kv("mbps", p.mbps);
        kv("delay_ms", p.delay_ms);
    }
    for (const auto& s : c.segments) {
        out += "\n[segment]\n";
        kv("start", s.start_s);
        kv("end", s.end_s);
        kv("rate", s.rate_cps);
    }
    for (const auto& f : c.failures) {
        out += "\n[failure]\n";
        kv("entity", f.entity);
        kv("fail", f.fail_s);
        kv("recover", f.recover_s);
    }
    return out;
}

std::vector<std::string> preset_names()
{
    std::vector<std::string> out;
    for (const auto& p : bundled_presets())
        out.emplace_back(p.name);
    return out;
}

std::optional<std::string_view> preset_text(std::string_view name)
{
    for (const auto& p : bundled_presets()) {
        if (p.name == name)
            return p.text;
    }
    return std::nullopt;
}

ScenarioConfig load_scenario(const std::string& name_or_path)
{
    ScenarioConfig cfg;
    if (auto text = preset_text(name_or_path)) {
        cfg = parse_scenario(*text);
    } else {
        std::ifstream in(name_or_path, std::ios::binary);
        if (!in) {
            if (name_or_path.find('/') == std::string::npos && name_or_path.find('.') == std::string::npos)
                throw ScenarioError(ErrorKind::UnknownPreset, fmt::format("no preset or file named '{}'", name_or_path));
            throw ScenarioError(ErrorKind::IoError, fmt::format("cannot read '{}'", name_or_path));
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        cfg = parse_scenario(ss.str());
    }
    validate(cfg);
    return cfg;
}

}  // namespace opensim::harness
