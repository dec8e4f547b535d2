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

#include "opensim/common.hpp"

#include <cctype>
#include <charconv>

namespace opensim {

bool Ipv4::try_parse(std::string_view dotted, Ipv4& out)
{
    std::uint32_t value = 0;
    int octets = 0;
    const char* p = dotted.data();
    const char* end = p + dotted.size();
    while (p < end) {
        unsigned octet = 0;
        auto [next, ec] = std::from_chars(p, end, octet);
        if (ec != std::errc{} || next == p || octet > 255)
            return false;
        value = (value << 8) | octet;
        ++octets;
        p = next;
        if (p < end) {
            if (*p != '.' || octets == 4)
                return false;
            ++p;
            if (p == end)
                return false;
        }
    }
    if (octets != 4)
        return false;
    out = Ipv4(value);
    return true;
}

Ipv4 Ipv4::parse(std::string_view dotted)
{
    Ipv4 ip;
    if (!try_parse(dotted, ip))
        throw std::invalid_argument("bad IPv4 address: " + std::string(dotted));
    return ip;
}

std::string Ipv4::str() const
{
    return std::to_string((value_ >> 24) & 0xff) + '.' + std::to_string((value_ >> 16) & 0xff) +
           '.' + std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

bool natural_less(std::string_view a, std::string_view b)
{
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie])))
                ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je])))
                ++je;
            // strip leading zeros, then longer run is larger
            std::size_t is = i, js = j;
            while (is + 1 < ie && a[is] == '0')
                ++is;
            while (js + 1 < je && b[js] == '0')
                ++js;
            if (ie - is != je - js)
                return ie - is < je - js;
            int c = a.substr(is, ie - is).compare(b.substr(js, je - js));
            if (c != 0)
                return c < 0;
            if (ie - i != je - j)
                return ie - i < je - j;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j])
                return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace opensim
