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

#include "opensim/nfv.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

namespace opensim::nfv {

void ScalingPolicy::validate() const
{
    if (!(0 < scale_in && scale_in < scale_out && scale_out < 100))
        throw NfvError(ErrorKind::InvalidPolicy,
                       fmt::format("thresholds must satisfy 0 < in < out < 100, got {} / {}", scale_in, scale_out));
    if (!(interval_s > 0))
        throw NfvError(ErrorKind::InvalidPolicy, "evaluation interval must be positive");
}

std::string_view to_string(ScaleAction a)
{
    switch (a) {
    case ScaleAction::None: return "none";
    case ScaleAction::Out: return "scale_out";
    case ScaleAction::In: return "scale_in";
    }
    return "?";
}

ScaleAction evaluate_scaling(const std::vector<double>& utils, const ScalingPolicy& policy)
{
    if (utils.empty())
        return ScaleAction::None;
    if (std::all_of(utils.begin(), utils.end(), [&](double u) { return u > policy.scale_out; }))
        return ScaleAction::Out;
    if (utils.size() < 2)
        return ScaleAction::None;
    const double victim = utils.back();
    if (victim >= policy.scale_in)
        return ScaleAction::None;
    double room = 0;
    for (std::size_t i = 0; i + 1 < utils.size(); ++i)
        room += policy.scale_out - utils[i];
    return room >= victim ? ScaleAction::In : ScaleAction::None;
}

Orchestrator::Orchestrator(std::vector<PhysicalMachine> pms, double vm_reservation)
    : pms_(std::move(pms)), reservation_(vm_reservation)
{
    for (auto& pm : pms_) {
        pm.vms.clear();
        pm.reserved = 0;
    }
}

VirtualMachine Orchestrator::scale_out()
{
    int best = -1;
    double best_load = 0;
    for (std::size_t i = 0; i < pms_.size(); ++i) {
        const auto& pm = pms_[i];
        if (pm.reserved + reservation_ > pm.cores + 1e-9)
            continue;
        double load = pm.cores > 0 ? pm.reserved / pm.cores : 1.0;
        if (best < 0 || load < best_load - 1e-12) {
            best = static_cast<int>(i);
            best_load = load;
        }
    }
    if (best < 0)
        throw NfvError(ErrorKind::NoPmCapacity, "no physical machine has room for another VM");

    auto& pm = pms_[static_cast<std::size_t>(best)];
    int slot = 1;
    for (;; ++slot) {
        auto id = fmt::format("VM{}{}", best + 1, slot);
        if (std::find(pm.vms.begin(), pm.vms.end(), id) == pm.vms.end())
            break;
    }
    VirtualMachine vm;
    vm.id = fmt::format("VM{}{}", best + 1, slot);
    vm.pm = pm.id;
    vm.pm_index = best + 1;
    vm.slot = slot;
    vm.reservation = reservation_;
    vm.launch_seq = next_seq_++;
    pm.vms.push_back(vm.id);
    pm.reserved += reservation_;
    vms_.push_back(vm);
    return vm;
}

std::string Orchestrator::scale_in()
{
    if (fleet_size() <= 1)
        throw NfvError(ErrorKind::FleetFloor, "the fleet cannot shrink below one VM");
    for (auto it = vms_.rbegin(); it != vms_.rend(); ++it) {
        if (!it->draining) {
            it->draining = true;
            return it->id;
        }
    }
    throw NfvError(ErrorKind::FleetFloor, "no running VM");
}

void Orchestrator::retire(const std::string& id)
{
    auto it = std::find_if(vms_.begin(), vms_.end(), [&](const VirtualMachine& v) { return v.id == id; });
    if (it == vms_.end())
        throw NfvError(ErrorKind::UnknownVm, "no VM " + id);
    auto& pm = pms_[static_cast<std::size_t>(it->pm_index - 1)];
    pm.vms.erase(std::remove(pm.vms.begin(), pm.vms.end(), id), pm.vms.end());
    pm.reserved -= it->reservation;
    vms_.erase(it);
}

void Orchestrator::set_utilization(const std::string& id, double u)
{
    for (auto& v : vms_) {
        if (v.id == id) {
            v.utilization = u;
            return;
        }
    }
    throw NfvError(ErrorKind::UnknownVm, "no VM " + id);
}

std::vector<const VirtualMachine*> Orchestrator::running() const
{
    std::vector<const VirtualMachine*> out;
    for (const auto& v : vms_) {
        if (!v.draining)
            out.push_back(&v);
    }
    return out;
}

std::vector<const VirtualMachine*> Orchestrator::draining() const
{
    std::vector<const VirtualMachine*> out;
    for (const auto& v : vms_) {
        if (v.draining)
            out.push_back(&v);
    }
    return out;
}

std::size_t Orchestrator::fleet_size() const
{
    return static_cast<std::size_t>(
        std::count_if(vms_.begin(), vms_.end(), [](const VirtualMachine& v) { return !v.draining; }));
}

std::size_t Orchestrator::total_slots() const
{
    std::size_t n = 0;
    for (const auto& pm : pms_)
        n += static_cast<std::size_t>(std::floor(pm.cores / reservation_ + 1e-9));
    return n;
}

const VirtualMachine* Orchestrator::find(const std::string& id) const
{
    for (const auto& v : vms_) {
        if (v.id == id)
            return &v;
    }
    return nullptr;
}

std::vector<double> packed_utilization(double load, std::size_t fleet, double vm_capacity, double fill)
{
    std::vector<double> share(fleet, 0.0);
    double left = std::max(0.0, load);
    for (auto& s : share) {
        s = std::min(left, fill * vm_capacity);
        left -= s;
    }
    if (left > 0 && fleet > 0) {
        for (auto& s : share)
            s += left / static_cast<double>(fleet);
    }
    std::vector<double> u(fleet);
    for (std::size_t i = 0; i < fleet; ++i)
        u[i] = std::min(100.0, 100.0 * share[i] / vm_capacity);
    return u;
}

FleetPlan fleet_plan(const std::vector<LoadStep>& trace, double vm_capacity, const ScalingPolicy& policy,
                     double fill, std::size_t max_fleet)
{
    policy.validate();
    FleetPlan plan;
    std::size_t fleet = 1;
    for (const auto& step : trace) {
        auto evals = static_cast<std::size_t>(std::llround(step.duration_s / policy.interval_s));
        std::vector<std::size_t> in_step;
        for (std::size_t k = 0; k < evals; ++k) {
            auto action = evaluate_scaling(packed_utilization(step.load_cps, fleet, vm_capacity, fill), policy);
            if (action == ScaleAction::Out && fleet < max_fleet)
                ++fleet;
            else if (action == ScaleAction::In)
                --fleet;
            plan.series.push_back(fleet);
            in_step.push_back(fleet);
        }
        plan.per_step.push_back(mode_of(in_step));
    }
    return plan;
}

std::size_t mode_of(const std::vector<std::size_t>& v)
{
    std::map<std::size_t, std::size_t> count;
    for (auto x : v)
        ++count[x];
    std::size_t best = 0;
    std::size_t best_n = 0;
    for (const auto& [x, n] : count) {
        if (n >= best_n) {
            best = x;
            best_n = n;
        }
    }
    return best;
}

}  // namespace opensim::nfv
