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
#include <string>
#include <vector>

#include "opensim/common.hpp"

namespace opensim::nfv {

enum class ErrorKind { NoPmCapacity, FleetFloor, InvalidPolicy, UnknownVm };
using NfvError = Error<ErrorKind>;

struct PhysicalMachine {
    std::string id;
    double cores = 2;  // abstract cpu units
    std::vector<std::string> vms;
    double reserved = 0;
};

struct VirtualMachine {
    std::string id;  // VM<pm index><slot>
    std::string pm;
    int pm_index = 0;
    int slot = 0;
    double reservation = 1;
    double utilization = 0;
    bool draining = false;
    std::uint64_t launch_seq = 0;
};

struct ScalingPolicy {
    double scale_out = 90;
    double scale_in = 10;
    double interval_s = 1;

    void validate() const;
};

enum class ScaleAction { None, Out, In };

std::string_view to_string(ScaleAction a);

// `utils` in launch order. Out when every VM is above scale_out. In when the
// newest VM is below scale_in and the older VMs have room for its load below
// scale_out. A lone VM never scales in.
ScaleAction evaluate_scaling(const std::vector<double>& utils, const ScalingPolicy& policy);

class Orchestrator {
public:
    Orchestrator(std::vector<PhysicalMachine> pms, double vm_reservation);

    // Places one VM on the least-loaded PM with room; lowest PM index wins ties.
    VirtualMachine scale_out();
    // Marks the newest running VM draining and returns its id.
    std::string scale_in();
    // Frees a drained VM's slot.
    void retire(const std::string& vm);
    void set_utilization(const std::string& vm, double u);

    // Running (not draining) VMs in launch order.
    std::vector<const VirtualMachine*> running() const;
    std::vector<const VirtualMachine*> draining() const;
    std::size_t fleet_size() const;
    std::size_t total_slots() const;
    const std::vector<PhysicalMachine>& pms() const { return pms_; }
    const VirtualMachine* find(const std::string& vm) const;

private:
    std::vector<PhysicalMachine> pms_;
    double reservation_;
    std::vector<VirtualMachine> vms_;  // launch order, retired ones removed
    std::uint64_t next_seq_ = 0;
};

struct LoadStep {
    double duration_s = 0;
    double load_cps = 0;
};

struct FleetPlan {
    std::vector<std::size_t> series;    // fleet size after each evaluation
    std::vector<std::size_t> per_step;  // most frequent size within each step
};

// Steady-state utilizations of `fleet` VMs when `load` is packed first-fit up to
// `fill` of each VM and any excess is spread evenly.
std::vector<double> packed_utilization(double load, std::size_t fleet, double vm_capacity, double fill);

// Fleet trajectory from repeatedly evaluating the policy against the packed
// utilizations, one change per evaluation.
FleetPlan fleet_plan(const std::vector<LoadStep>& trace, double vm_capacity, const ScalingPolicy& policy,
                     double fill = 0.95, std::size_t max_fleet = 64);

// Most frequent value; ties go to the larger value.
std::size_t mode_of(const std::vector<std::size_t>& v);

}  // namespace opensim::nfv
