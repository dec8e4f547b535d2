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

#include "opensim/sip.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace opensim::sip {

namespace {

constexpr std::array<std::string_view, 6> kMethodNames = {
    "INVITE", "REGISTER", "BYE", "ACK", "CANCEL", "OPTIONS"};

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

enum class Header { Via, From, To, CallId, CSeq, Contact, RecordRoute, ContentLength, Other };

Header header_of(std::string_view name)
{
    if (iequals(name, "Via") || iequals(name, "v"))
        return Header::Via;
    if (iequals(name, "From") || iequals(name, "f"))
        return Header::From;
    if (iequals(name, "To") || iequals(name, "t"))
        return Header::To;
    if (iequals(name, "Call-ID") || iequals(name, "i"))
        return Header::CallId;
    if (iequals(name, "CSeq"))
        return Header::CSeq;
    if (iequals(name, "Contact") || iequals(name, "m"))
        return Header::Contact;
    if (iequals(name, "Record-Route"))
        return Header::RecordRoute;
    if (iequals(name, "Content-Length") || iequals(name, "l"))
        return Header::ContentLength;
    return Header::Other;
}

[[noreturn]] void fail(ErrorKind k, const std::string& what, std::string detail = {})
{
    throw SipError(k, what, std::move(detail));
}

std::vector<std::string_view> split_commas(std::string_view v)
{
    std::vector<std::string_view> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '<')
            ++depth;
        else if (v[i] == '>')
            --depth;
        else if (v[i] == ',' && depth == 0) {
            out.push_back(trim(v.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.push_back(trim(v.substr(start)));
    return out;
}

bool parse_port(std::string_view s, std::uint16_t& port)
{
    unsigned v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v > 65535)
        return false;
    port = static_cast<std::uint16_t>(v);
    return true;
}

HostPort parse_hostport(std::string_view s)
{
    HostPort hp;
    auto semi = s.find(';');
    if (semi != std::string_view::npos)
        s = s.substr(0, semi);
    s = trim(s);
    auto colon = s.rfind(':');
    if (colon != std::string_view::npos && parse_port(s.substr(colon + 1), hp.port))
        hp.host = std::string(s.substr(0, colon));
    else
        hp.host = std::string(s);
    return hp;
}

HostPort parse_via_entry(std::string_view v)
{
    // SIP/2.0/UDP host:port;params
    auto sp = v.find_first_of(" \t");
    if (sp == std::string_view::npos)
        fail(ErrorKind::InvariantViolation, fmt::format("bad Via value '{}'", v));
    return parse_hostport(trim(v.substr(sp + 1)));
}

std::string_view strip_sip_scheme(std::string_view uri)
{
    if (uri.size() >= 4 && iequals(uri.substr(0, 4), "sip:"))
        uri.remove_prefix(4);
    return uri;
}

NameAddr parse_name_addr(std::string_view v)
{
    NameAddr na;
    std::string_view params;
    auto lt = v.find('<');
    if (lt != std::string_view::npos) {
        auto gt = v.find('>', lt);
        if (gt == std::string_view::npos)
            fail(ErrorKind::InvariantViolation, fmt::format("unterminated URI in '{}'", v));
        na.uri = std::string(v.substr(lt + 1, gt - lt - 1));
        params = v.substr(gt + 1);
    } else {
        auto semi = v.find(';');
        na.uri = std::string(trim(v.substr(0, semi)));
        if (semi != std::string_view::npos)
            params = v.substr(semi);
    }
    while (!params.empty()) {
        auto semi = params.find(';');
        if (semi == std::string_view::npos)
            break;
        params.remove_prefix(semi + 1);
        auto next = params.find(';');
        auto param = trim(params.substr(0, next));
        if (param.size() > 4 && iequals(param.substr(0, 4), "tag="))
            na.tag = std::string(param.substr(4));
    }
    return na;
}

HostPort parse_contact(std::string_view v)
{
    auto lt = v.find('<');
    if (lt != std::string_view::npos) {
        auto gt = v.find('>', lt);
        v = v.substr(lt + 1, gt == std::string_view::npos ? std::string_view::npos : gt - lt - 1);
    }
    v = strip_sip_scheme(v);
    auto at = v.find('@');
    if (at != std::string_view::npos)
        v = v.substr(at + 1);
    return parse_hostport(v);
}

std::string parse_route_entry(std::string_view v)
{
    auto lt = v.find('<');
    if (lt != std::string_view::npos) {
        auto gt = v.find('>', lt);
        v = v.substr(lt + 1, gt == std::string_view::npos ? std::string_view::npos : gt - lt - 1);
    }
    v = strip_sip_scheme(v);
    auto semi = v.find(';');
    return std::string(trim(v.substr(0, semi)));
}

CSeq parse_cseq(std::string_view v)
{
    CSeq c;
    auto sp = v.find_first_of(" \t");
    if (sp == std::string_view::npos)
        fail(ErrorKind::InvariantViolation, fmt::format("bad CSeq '{}'", v));
    auto num = v.substr(0, sp);
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), c.seq);
    if (ec != std::errc{} || p != num.data() + num.size())
        fail(ErrorKind::InvariantViolation, fmt::format("bad CSeq number '{}'", v));
    auto m = method_from_string(trim(v.substr(sp + 1)));
    if (!m)
        fail(ErrorKind::InvariantViolation, fmt::format("bad CSeq method '{}'", v));
    c.method = *m;
    return c;
}

std::variant<Request, Response> parse_first_line(std::string_view line)
{
    line = trim(line);
    if (line.size() >= 8 && line.substr(0, 8) == "SIP/2.0 ") {
        auto rest = line.substr(8);
        int code = 0;
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), code);
        if (ec != std::errc{} || p != rest.data() + 3 || code < 100 || code > 699)
            fail(ErrorKind::MalformedFirstLine, fmt::format("bad status line '{}'", line));
        auto reason = trim(rest.substr(3));
        return Response{StatusCode(code, std::string(reason))};
    }
    auto sp1 = line.find(' ');
    auto sp2 = line.rfind(' ');
    if (sp1 == std::string_view::npos || sp1 == sp2 || line.substr(sp2 + 1) != "SIP/2.0")
        fail(ErrorKind::MalformedFirstLine, fmt::format("bad request line '{}'", line));
    auto m = method_from_string(line.substr(0, sp1));
    auto uri = trim(line.substr(sp1 + 1, sp2 - sp1 - 1));
    if (!m || uri.empty() || uri.find(' ') != std::string_view::npos)
        fail(ErrorKind::MalformedFirstLine, fmt::format("bad request line '{}'", line));
    return Request{*m, std::string(uri)};
}

bool has_line_break(std::string_view s)
{
    return s.find_first_of("\r\n") != std::string_view::npos;
}

}  // namespace

std::string_view to_string(Method m)
{
    return kMethodNames[static_cast<std::size_t>(m)];
}

std::optional<Method> method_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
        if (iequals(s, kMethodNames[i]))
            return static_cast<Method>(i);
    }
    return std::nullopt;
}

std::string_view canonical_reason(int code)
{
    switch (code) {
    case 100: return "Trying";
    case 180: return "Ringing";
    case 200: return "OK";
    case 404: return "Not Found";
    case 408: return "Request Timeout";
    case 481: return "Call/Transaction Does Not Exist";
    case 500: return "Server Internal Error";
    case 503: return "Service Unavailable";
    default:
        if (code < 200)
            return "Session Progress";
        if (code < 300)
            return "Success";
        if (code < 400)
            return "Redirection";
        if (code < 500)
            return "Client Error";
        if (code < 600)
            return "Server Error";
        return "Global Failure";
    }
}

StatusCode::StatusCode(int c, std::string r) : code(c), reason(std::move(r))
{
    if (reason.empty())
        reason = std::string(canonical_reason(code));
}

Method Message::method() const
{
    return is_request() ? request().method : cseq.method;
}

Message parse(std::string_view text)
{
    if (trim(text).empty())
        fail(ErrorKind::EmptyInput, "empty SIP message");

    // header block ends at the first empty line
    std::size_t head_end = std::string_view::npos;
    std::size_t body_start = text.size();
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\n')
            continue;
        std::size_t j = i + 1;
        if (j < text.size() && text[j] == '\r')
            ++j;
        if (j < text.size() && text[j] == '\n') {
            head_end = i;
            body_start = j + 1;
            break;
        }
        if (j == text.size()) {
            head_end = i;
            body_start = text.size();
            break;
        }
    }
    std::string_view head = text.substr(0, head_end);

    Message msg;
    bool have[5] = {false, false, false, false, false};  // via from to call-id cseq
    std::optional<std::size_t> content_length;

    std::size_t pos = 0;
    bool first = true;
    while (pos <= head.size()) {
        auto nl = head.find('\n', pos);
        auto line = head.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? head.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (first) {
            msg.kind = parse_first_line(line);
            first = false;
            continue;
        }
        if (trim(line).empty())
            continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos)
            fail(ErrorKind::InvariantViolation, fmt::format("header line without colon '{}'", line));
        auto name = trim(line.substr(0, colon));
        auto value = trim(line.substr(colon + 1));
        switch (header_of(name)) {
        case Header::Via:
            for (auto entry : split_commas(value))
                msg.via.push_back(parse_via_entry(entry));
            have[0] = true;
            break;
        case Header::From:
            msg.from = parse_name_addr(value);
            have[1] = true;
            break;
        case Header::To:
            msg.to = parse_name_addr(value);
            have[2] = true;
            break;
        case Header::CallId:
            msg.call_id = std::string(value);
            have[3] = !value.empty();
            break;
        case Header::CSeq:
            msg.cseq = parse_cseq(value);
            have[4] = true;
            break;
        case Header::Contact:
            msg.contact = parse_contact(value);
            break;
        case Header::RecordRoute:
            for (auto entry : split_commas(value))
                msg.record_route.push_back(parse_route_entry(entry));
            break;
        case Header::ContentLength: {
            std::size_t n = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
            if (ec == std::errc{} && p == value.data() + value.size())
                content_length = n;
            break;
        }
        case Header::Other:
            msg.extras.emplace_back(std::string(name), std::string(value));
            break;
        }
    }

    static constexpr std::string_view kNames[5] = {"Via", "From", "To", "Call-ID", "CSeq"};
    for (int i = 0; i < 5; ++i) {
        if (!have[i])
            fail(ErrorKind::MissingMandatoryHeader,
                 fmt::format("missing mandatory header {}", kNames[i]), std::string(kNames[i]));
    }
    if (msg.is_request() && msg.cseq.method != msg.request().method)
        fail(ErrorKind::InvariantViolation, "CSeq method differs from request method");

    auto body = text.substr(std::min(body_start, text.size()));
    if (content_length && *content_length <= body.size())
        body = body.substr(0, *content_length);
    msg.body = std::string(body);
    return msg;
}

void check_invariants(const Message& msg)
{
    auto bad = [](const std::string& what) { fail(ErrorKind::InvariantViolation, what); };
    if (msg.call_id.empty())
        bad("empty Call-ID");
    if (msg.via.empty())
        bad("empty Via list");
    if (msg.is_request()) {
        if (msg.request().method != msg.cseq.method)
            bad("CSeq method differs from request method");
        const auto& uri = msg.request().uri;
        if (uri.empty() || uri.find_first_of(" \r\n") != std::string::npos)
            bad("bad request URI");
    } else {
        const auto& st = msg.status();
        if (st.code < 100 || st.code > 699 || has_line_break(st.reason))
            bad("bad status");
    }
    for (const auto& v : msg.via) {
        if (v.host.empty() || v.host.find_first_of(" ;,:\r\n") != std::string::npos)
            bad("bad Via host");
    }
    for (const auto* na : {&msg.from, &msg.to}) {
        if (na->uri.find_first_of("<>\r\n") != std::string::npos ||
            na->tag.find_first_of(";<> \r\n") != std::string::npos)
            bad("bad name-addr");
    }
    if (has_line_break(msg.call_id) || msg.call_id.front() == ' ' || msg.call_id.back() == ' ')
        bad("bad Call-ID");
    if (msg.contact && (msg.contact->host.empty() ||
                        msg.contact->host.find_first_of(" ;,:@<>\r\n") != std::string::npos))
        bad("bad Contact");
    for (const auto& r : msg.record_route) {
        if (r.empty() || r.find_first_of(" ;,<>\r\n") != std::string::npos)
            bad("bad Record-Route entry");
    }
    for (const auto& [name, value] : msg.extras) {
        if (name.empty() || name.find_first_of(": \t\r\n") != std::string::npos ||
            header_of(name) != Header::Other || has_line_break(value) || trim(value) != value)
            bad(fmt::format("bad extra header '{}'", name));
    }
}

std::string serialize(const Message& msg)
{
    check_invariants(msg);
    std::string out;
    out.reserve(256 + msg.body.size());
    auto header = [&out](std::string_view name, std::string_view value) {
        out.append(name).append(": ").append(value).append("\r\n");
    };
    auto name_addr = [](const NameAddr& na) {
        std::string s = "<" + na.uri + ">";
        if (!na.tag.empty())
            s += ";tag=" + na.tag;
        return s;
    };

    if (msg.is_request())
        out += fmt::format("{} {} SIP/2.0\r\n", to_string(msg.request().method), msg.request().uri);
    else
        out += fmt::format("SIP/2.0 {} {}\r\n", msg.status().code, msg.status().reason);
    for (const auto& v : msg.via)
        header("Via", fmt::format("SIP/2.0/UDP {}:{}", v.host, v.port));
    for (const auto& r : msg.record_route)
        header("Record-Route", fmt::format("<sip:{};lr>", r));
    header("From", name_addr(msg.from));
    header("To", name_addr(msg.to));
    header("Call-ID", msg.call_id);
    header("CSeq", fmt::format("{} {}", msg.cseq.seq, to_string(msg.cseq.method)));
    if (msg.contact)
        header("Contact", fmt::format("<sip:{}:{}>", msg.contact->host, msg.contact->port));
    for (const auto& [name, value] : msg.extras)
        header(name, value);
    header("Content-Length", std::to_string(msg.body.size()));
    out += "\r\n";
    out += msg.body;
    return out;
}

Message make_request(Method m, std::string request_uri, std::string call_id, std::uint32_t seq)
{
    Message msg;
    msg.kind = Request{m, std::move(request_uri)};
    msg.call_id = std::move(call_id);
    msg.cseq = CSeq{seq, m};
    return msg;
}

std::string dialog_tag(std::string_view call_id)
{
    return fmt::format("{:08x}", static_cast<std::uint32_t>(fnv1a(call_id) >> 16));
}

Message make_response(const Message& req, const StatusCode& status)
{
    if (!req.is_request())
        fail(ErrorKind::NotARequest, "make_response needs a request");
    Message rsp;
    rsp.kind = Response{status};
    rsp.via = req.via;
    rsp.from = req.from;
    rsp.to = req.to;
    rsp.call_id = req.call_id;
    rsp.cseq = req.cseq;
    rsp.record_route = req.record_route;
    if (status.code >= 180 && rsp.to.tag.empty())
        rsp.to.tag = dialog_tag(req.call_id);
    return rsp;
}

std::string_view to_string(CallPhase p)
{
    static constexpr std::string_view names[] = {"Idle",        "InviteSent", "Trying",    "Ringing",
                                                 "Established", "ByeSent",    "Terminated"};
    return names[static_cast<std::size_t>(p)];
}

CallState advance_call(CallState state, const Message& msg)
{
    auto next = [&]() -> std::optional<CallState> {
        switch (state.phase) {
        case CallPhase::Idle:
            if (msg.is_request(Method::Invite))
                return CallPhase::InviteSent;
            break;
        case CallPhase::InviteSent:
            if (msg.is_response_to(Method::Invite) && msg.status().code == 100)
                return CallPhase::Trying;
            break;
        case CallPhase::Trying:
            if (msg.is_response_to(Method::Invite) && msg.status().code == 180)
                return CallPhase::Ringing;
            break;
        case CallPhase::Ringing:
            if (msg.is_response_to(Method::Invite) && msg.status().code == 200) {
                CallState s(CallPhase::Established);
                s.awaiting_ack = true;
                return s;
            }
            break;
        case CallPhase::Established:
            if (state.awaiting_ack && msg.is_request(Method::Ack))
                return CallPhase::Established;
            if (!state.awaiting_ack && msg.is_request(Method::Bye))
                return CallPhase::ByeSent;
            break;
        case CallPhase::ByeSent:
            if (msg.is_response_to(Method::Bye) && msg.status().code == 200)
                return CallPhase::Terminated;
            break;
        case CallPhase::Terminated:
            break;
        }
        return std::nullopt;
    }();
    if (!next)
        fail(ErrorKind::IllegalTransition,
             fmt::format("illegal transition from {}{} on {}", to_string(state.phase),
                         state.awaiting_ack ? " (awaiting Ack)" : "", describe(msg)));
    return *next;
}

std::vector<Message> canonical_call_flow(const std::string& call_id)
{
    Message invite = make_request(Method::Invite, "sip:bob@example.net", call_id, 1);
    invite.via = {{"10.0.0.1", 5060}};
    invite.from = {"sip:alice@example.net", "a1"};
    invite.to = {"sip:bob@example.net", ""};
    Message ack = make_request(Method::Ack, "sip:bob@example.net", call_id, 1);
    ack.via = invite.via;
    ack.from = invite.from;
    ack.to = {invite.to.uri, dialog_tag(call_id)};
    Message bye = make_request(Method::Bye, "sip:bob@example.net", call_id, 2);
    bye.via = invite.via;
    bye.from = invite.from;
    bye.to = ack.to;
    return {invite,
            make_response(invite, StatusCode(100)),
            make_response(invite, StatusCode(180)),
            make_response(invite, StatusCode(200)),
            ack,
            bye,
            make_response(bye, StatusCode(200))};
}

std::string describe(const Message& msg)
{
    if (msg.is_request())
        return fmt::format("{} cid={} cseq={}", to_string(msg.request().method), msg.call_id,
                           msg.cseq.seq);
    return fmt::format("{} {} ({}) cid={} cseq={}", msg.status().code, msg.status().reason,
                       to_string(msg.cseq.method), msg.call_id, msg.cseq.seq);
}

}  // namespace opensim::sip
