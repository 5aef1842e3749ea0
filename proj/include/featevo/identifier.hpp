// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <string_view>

namespace featevo::dsl
{

inline constexpr std::array<std::string_view, 23> kKeywords = {
    "feature", "where", "window", "all",   "last", "hours", "days", "and",  "or",   "not",     "in",    "is",
    "null",    "hour",  "dayofweek", "count", "sum", "mean", "min", "max", "std", "nunique", "first",
};

inline bool is_keyword(std::string_view word)
{
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

/// [a-z_][a-z0-9_]* and not reserved.
inline bool is_valid_identifier(std::string_view word)
{
    if (word.empty())
        return false;
    auto head = word.front();
    if (!((head >= 'a' && head <= 'z') || head == '_'))
        return false;
    for (char c : word)
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'))
            return false;
    return !is_keyword(word);
}

} // namespace featevo::dsl
