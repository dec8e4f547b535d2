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

#include "opensim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace opensim::harness {

const GroupSummary* SummaryStats::find(const std::string& kind) const
{
    for (const auto& g : groups) {
        if (g.kind == kind)
            return &g;
    }
    return nullptr;
}

void emit_metrics(std::vector<MetricsRow> rows, std::ostream& out)
{
    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.time != b.time)
            return a.time < b.time;
        return natural_less(a.entity, b.entity);
    });
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        fmt::print(out, "{:.3f},{},{},{:.3f},{:.3f},{:.3f},{:.3f},{},{:.3f}\n", r.time, r.entity, r.kind,
                   r.throughput, r.resp_ms, r.cpu, r.mem, r.rejects, r.util);
    }
}

void emit_metrics(std::vector<MetricsRow> rows, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw MetricsError(MetricsErrorKind::IoError, "cannot write " + path);
    emit_metrics(std::move(rows), out);
    if (!out)
        throw MetricsError(MetricsErrorKind::IoError, "write to " + path + " failed");
}

void emit_system(const std::vector<SystemRow>& rows, std::ostream& out)
{
    out << "time,offered,completed,rejected,dropped,setup_ms,fleet\n";
    for (const auto& r : rows) {
        fmt::print(out, "{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{}\n", r.time, r.offered, r.completed,
                   r.rejected, r.dropped, r.setup_ms, r.fleet);
    }
}

void emit_orchestration(const std::vector<OrchestrationRow>& rows, std::ostream& out)
{
    out << "time,action,vm,pm,fleet\n";
    for (const auto& r : rows)
        fmt::print(out, "{:.6f},{},{},{},{}\n", r.time, r.action, r.vm, r.pm, r.fleet);
}

void emit_summary(const SummaryStats& s, std::ostream& out)
{
    out << "group,entities,cpu_mean,cpu_sigma,peak_throughput,avg_resp_ms,fairness\n";
    for (const auto& g : s.groups) {
        fmt::print(out, "{},{},{:.6f},{:.6f},{:.3f},{:.3f},{:.6f}\n", g.kind, g.entities, g.cpu_mean, g.cpu_sigma,
                   g.peak_throughput, g.avg_resp_ms, g.fairness);
    }
}

std::pair<double, double> mean_sigma(const std::vector<double>& v)
{
    if (v.empty())
        return {0.0, 0.0};
    double sum = 0;
    for (double x : v)
        sum += x;
    const double mean = sum / static_cast<double>(v.size());
    double sq = 0;
    for (double x : v)
        sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / static_cast<double>(v.size()))};
}

SummaryStats compute_summary(const std::vector<MetricsRow>& rows)
{
    struct Entity {
        double cpu_sum = 0;
        std::size_t samples = 0;
        double throughput_sum = 0;
    };
    struct Group {
        std::map<std::string, Entity, NaturalLess> entities;
        std::map<double, double> throughput_at;
        double resp_sum = 0;
        std::size_t resp_n = 0;
    };
    std::map<std::string, Group> groups;
    for (const auto& r : rows) {
        if (r.kind == "link")
            continue;
        auto& g = groups[r.kind];
        auto& e = g.entities[r.entity];
        e.cpu_sum += r.cpu;
        ++e.samples;
        e.throughput_sum += r.throughput;
        g.throughput_at[r.time] += r.throughput;
        if (r.resp_ms > 0) {
            g.resp_sum += r.resp_ms;
            ++g.resp_n;
        }
    }
    if (groups.empty())
        throw MetricsError(MetricsErrorKind::EmptyInput, "no entity rows to summarize");

    SummaryStats out;
    for (const auto& [kind, g] : groups) {
        GroupSummary s;
        s.kind = kind;
        s.entities = g.entities.size();
        std::vector<double> means;
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0;
        for (const auto& [id, e] : g.entities) {
            means.push_back(e.cpu_sum / static_cast<double>(e.samples));
            lo = std::min(lo, e.throughput_sum);
            hi = std::max(hi, e.throughput_sum);
        }
        std::tie(s.cpu_mean, s.cpu_sigma) = mean_sigma(means);
        for (const auto& [t, x] : g.throughput_at)
            s.peak_throughput = std::max(s.peak_throughput, x);
        s.avg_resp_ms = g.resp_n ? g.resp_sum / static_cast<double>(g.resp_n) : 0.0;
        if (hi <= 0)
            s.fairness = 1.0;
        else if (lo <= 0)
            s.fairness = std::numeric_limits<double>::infinity();
        else
            s.fairness = hi / lo;
        out.groups.push_back(std::move(s));
    }
    return out;
}

SummaryStats average_summaries(const std::vector<SummaryStats>& runs)
{
    if (runs.empty())
        throw MetricsError(MetricsErrorKind::EmptyInput, "no runs to average");
    SummaryStats out = runs.front();
    const double n = static_cast<double>(runs.size());
    for (auto& g : out.groups) {
        GroupSummary acc;
        acc.kind = g.kind;
        acc.entities = g.entities;
        acc.fairness = 0;
        for (const auto& r : runs) {
            const GroupSummary* x = r.find(g.kind);
            if (!x)
                throw MetricsError(MetricsErrorKind::EmptyInput, "run without group " + g.kind);
            acc.cpu_mean += x->cpu_mean / n;
            acc.cpu_sigma += x->cpu_sigma / n;
            acc.peak_throughput += x->peak_throughput / n;
            acc.avg_resp_ms += x->avg_resp_ms / n;
            acc.fairness += x->fairness / n;
        }
        g = acc;
    }
    return out;
}

}  // namespace opensim::harness
