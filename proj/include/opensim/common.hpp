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

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace opensim {

// Simulation time: integer microseconds.
using SimTime = std::int64_t;

constexpr SimTime kMicrosPerSecond = 1'000'000;

inline SimTime seconds(double s) { return static_cast<SimTime>(std::llround(s * 1e6)); }
inline SimTime millis(double ms) { return static_cast<SimTime>(std::llround(ms * 1e3)); }
constexpr double to_seconds(SimTime t) { return static_cast<double>(t) / 1e6; }
constexpr double to_millis(SimTime t) { return static_cast<double>(t) / 1e3; }

// Error carrying a module-specific kind. Each module instantiates it with its
// own enum so callers can branch on kind() without string matching.
template <typename Kind>
class Error : public std::runtime_error {
public:
    Error(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// IPv4 address as a strong type.
class Ipv4 {
public:
    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t v) : value_(v) {}

    static Ipv4 parse(std::string_view dotted);
    static bool try_parse(std::string_view dotted, Ipv4& out);
    std::string str() const;

    constexpr std::uint32_t value() const { return value_; }
    constexpr bool is_unset() const { return value_ == 0; }
    auto operator<=>(const Ipv4&) const = default;

private:
    std::uint32_t value_ = 0;
};

// "S2" < "S10": digit runs compare numerically.
bool natural_less(std::string_view a, std::string_view b);

struct NaturalLess {
    bool operator()(std::string_view a, std::string_view b) const { return natural_less(a, b); }
};

std::uint64_t fnv1a(std::string_view s);

}  // namespace opensim

template <>
struct std::hash<opensim::Ipv4> {
    std::size_t operator()(const opensim::Ipv4& ip) const noexcept
    {
        return std::hash<std::uint32_t>{}(ip.value());
    }
};
