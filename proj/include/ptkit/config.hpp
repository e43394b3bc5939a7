// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ptkit {

/// Plain `key = value` text config. Lines starting with '#' and blank lines
/// are ignored; keys are unique. All accessors throw Error(config).
class KvConfig {
public:
    static KvConfig parse(std::string_view text);

    bool has(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;

    std::string get_string(std::string_view key, std::string fallback) const;
    double get_double(std::string_view key, double fallback) const;
    std::int64_t get_int(std::string_view key, std::int64_t fallback) const;
    std::size_t get_size(std::string_view key, std::size_t fallback) const;
    std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
    bool get_bool(std::string_view key, bool fallback) const;

    /// Entries whose key starts with `prefix`, in file order, prefix removed.
    std::vector<std::pair<std::string, std::string>> with_prefix(std::string_view prefix) const;

    /// Rejects keys that are neither listed nor under one of the prefixes.
    void require_known(std::initializer_list<std::string_view> keys,
                       std::initializer_list<std::string_view> prefixes = {}) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);

}  // namespace ptkit
