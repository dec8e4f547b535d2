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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "opensim/common.hpp"

namespace opensim::sip {

enum class Method : std::uint8_t { Invite, Register, Bye, Ack, Cancel, Options };

std::string_view to_string(Method m);
std::optional<Method> method_from_string(std::string_view s);

struct StatusCode {
    int code = 200;
    std::string reason;

    StatusCode() = default;
    // Fills in the canonical reason phrase when none is given.
    StatusCode(int c, std::string r = {});

    bool is_provisional() const { return code < 200; }
    bool is_final() const { return code >= 200; }
    bool operator==(const StatusCode&) const = default;
};

std::string_view canonical_reason(int code);

struct HostPort {
    std::string host;
    std::uint16_t port = 5060;
    bool operator==(const HostPort&) const = default;
};

struct NameAddr {
    std::string uri;
    std::string tag;  // empty means no tag
    bool operator==(const NameAddr&) const = default;
};

struct CSeq {
    std::uint32_t seq = 1;
    Method method = Method::Invite;
    bool operator==(const CSeq&) const = default;
};

struct Request {
    Method method = Method::Invite;
    std::string uri;
    bool operator==(const Request&) const = default;
};

struct Response {
    StatusCode status;
    bool operator==(const Response&) const = default;
};

struct Message {
    std::variant<Request, Response> kind;
    std::vector<HostPort> via;
    NameAddr from;
    NameAddr to;
    std::string call_id;
    CSeq cseq;
    std::optional<HostPort> contact;
    std::vector<std::string> record_route;
    std::string body;
    // Headers we do not model, kept in arrival order for round-tripping.
    std::vector<std::pair<std::string, std::string>> extras;

    bool is_request() const { return std::holds_alternative<Request>(kind); }
    bool is_response() const { return !is_request(); }
    // Request method, or the CSeq method for responses.
    Method method() const;
    const Request& request() const { return std::get<Request>(kind); }
    const StatusCode& status() const { return std::get<Response>(kind).status; }
    bool is_request(Method m) const { return is_request() && request().method == m; }
    bool is_response_to(Method m) const { return is_response() && cseq.method == m; }

    bool operator==(const Message&) const = default;
};

enum class ErrorKind {
    EmptyInput,
    MalformedFirstLine,
    MissingMandatoryHeader,
    InvariantViolation,
    NotARequest,
    IllegalTransition,
};

class SipError : public Error<ErrorKind> {
public:
    SipError(ErrorKind k, const std::string& what, std::string detail = {})
        : Error(k, what), detail_(std::move(detail)) {}
    // Header name for MissingMandatoryHeader.
    const std::string& detail() const { return detail_; }

private:
    std::string detail_;
};

Message parse(std::string_view text);
std::string serialize(const Message& msg);

// Throws InvariantViolation when msg could not be serialized faithfully.
void check_invariants(const Message& msg);

Message make_request(Method m, std::string request_uri, std::string call_id, std::uint32_t seq);
Message make_response(const Message& req, const StatusCode& status);

// Deterministic To-tag for a dialog.
std::string dialog_tag(std::string_view call_id);

enum class CallPhase : std::uint8_t {
    Idle,
    InviteSent,
    Trying,
    Ringing,
    Established,
    ByeSent,
    Terminated,
};

std::string_view to_string(CallPhase p);

// Established is entered on the 200 OK; awaiting_ack stays set until the
// Ack has been seen so that an early Bye is rejected.
struct CallState {
    CallPhase phase = CallPhase::Idle;
    bool awaiting_ack = false;

    CallState() = default;
    CallState(CallPhase p) : phase(p) {}
    bool operator==(const CallState&) const = default;
};

CallState advance_call(CallState state, const Message& msg);

// The seven messages of a basic call in wire order.
std::vector<Message> canonical_call_flow(const std::string& call_id);

std::string describe(const Message& msg);

}  // namespace opensim::sip
