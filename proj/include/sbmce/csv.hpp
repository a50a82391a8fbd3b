// SPDX-License-Identifier: Apache-2.0
//
// sbmce: score-based MIMO channel estimation
// Copyright (C) 2026 sbmce contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "error.hpp"

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace sbmce::csv {

// Shortest round-trip representation, '.' decimal point regardless of locale.
inline std::string number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorKind::Format,
            "not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split_line(std::string_view line, char sep = ',')
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos)
        {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace sbmce::csv
