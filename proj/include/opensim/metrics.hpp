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
#include <ostream>
#include <string>
#include <vector>

#include "opensim/common.hpp"

namespace opensim::harness {

// One row per (entity, sampling interval). Throughput is calls/s for proxies
// and balancers, PacketIns/s for the controller; util is only set on links.
struct MetricsRow {
    double time = 0;
    std::string entity;
    std::string kind;  // proxy | balancer | controller | link
    double throughput = 0;
    double resp_ms = 0;
    double cpu = 0;
    double mem = 0;
    std::uint64_t rejects = 0;
    double util = 0;
    bool operator==(const MetricsRow&) const = default;
};

// Caller-side view of one sampling interval.
struct SystemRow {
    double time = 0;
    double offered = 0;    // call attempts/s
    double completed = 0;  // calls/s
    double rejected = 0;
    double dropped = 0;
    double setup_ms = 0;  // mean Invite-to-200 time of calls set up in the interval
    std::size_t fleet = 0;
};

struct OrchestrationRow {
    double time = 0;
    std::string action;
    std::string vm;
    std::string pm;
    std::size_t fleet = 0;
};

struct GroupSummary {
    std::string kind;
    std::size_t entities = 0;
    double cpu_mean = 0;   // mean of per-entity mean cpu
    double cpu_sigma = 0;  // population sigma of per-entity mean cpu
    double peak_throughput = 0;
    double avg_resp_ms = 0;
    double fairness = 1;  // max/min per-entity total throughput
};

struct SummaryStats {
    std::vector<GroupSummary> groups;  // sorted by kind
    const GroupSummary* find(const std::string& kind) const;
};

enum class MetricsErrorKind { EmptyInput, IoError };
using MetricsError = Error<MetricsErrorKind>;

inline constexpr const char* kMetricsHeader = "time,entity,kind,throughput,resp_ms,cpu,mem,rejects,util";

// Sorts rows by (time, entity) and writes them with the fixed header.
void emit_metrics(std::vector<MetricsRow> rows, std::ostream& out);
void emit_metrics(std::vector<MetricsRow> rows, const std::string& path);
void emit_system(const std::vector<SystemRow>& rows, std::ostream& out);
void emit_orchestration(const std::vector<OrchestrationRow>& rows, std::ostream& out);
void emit_summary(const SummaryStats& s, std::ostream& out);

// Link rows are ignored; throws EmptyInput when nothing else is left.
SummaryStats compute_summary(const std::vector<MetricsRow>& rows);
// Field-wise mean of summaries with identical groups.
SummaryStats average_summaries(const std::vector<SummaryStats>& runs);

// Population mean and sigma.
std::pair<double, double> mean_sigma(const std::vector<double>& v);

}  // namespace opensim::harness
