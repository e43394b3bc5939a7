// SPDX-License-Identifier: Apache-2.0
#include "ptkit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "ptkit/error.hpp"

namespace ptkit {

namespace {

std::string_view trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
    while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::parse: return "parse";
        case ErrorCode::structure: return "structure";
        case ErrorCode::coverage: return "coverage";
        case ErrorCode::domain: return "domain";
        case ErrorCode::shape: return "shape";
        case ErrorCode::frozen: return "frozen";
        case ErrorCode::config: return "config";
    }
    return "unknown";
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    double value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
        throw Error(ErrorCode::config, std::string(what) + ": '" + std::string(text) + "' is not a number");
    return value;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
    text = trim(text);
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error(ErrorCode::config, std::string(what) + ": '" + std::string(text) + "' is not an integer");
    return value;
}

KvConfig KvConfig::parse(std::string_view text) {
    KvConfig cfg;
    std::set<std::string> seen;
    long line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::config, "config line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw Error(ErrorCode::config, "config line " + std::to_string(line_no) + ": empty key", line_no);
        if (!seen.insert(key).second)
            throw Error(ErrorCode::config, "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'", line_no);
        cfg.entries_.emplace_back(std::move(key), std::move(value));
    }
    return cfg;
}

bool KvConfig::has(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KvConfig::get(std::string_view key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return std::nullopt;
}

std::string KvConfig::get_string(std::string_view key, std::string fallback) const {
    auto v = get(key);
    return v ? *v : std::move(fallback);
}

double KvConfig::get_double(std::string_view key, double fallback) const {
    auto v = get(key);
    return v ? parse_double(*v, key) : fallback;
}

std::int64_t KvConfig::get_int(std::string_view key, std::int64_t fallback) const {
    auto v = get(key);
    return v ? parse_int(*v, key) : fallback;
}

std::size_t KvConfig::get_size(std::string_view key, std::size_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    const auto x = parse_int(*v, key);
    if (x < 0) throw Error(ErrorCode::config, std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(x);
}

std::uint64_t KvConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
    if (ec != std::errc{} || ptr != v->data() + v->size())
        throw Error(ErrorCode::config, std::string(key) + ": '" + *v + "' is not an unsigned integer");
    return value;
}

bool KvConfig::get_bool(std::string_view key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw Error(ErrorCode::config, std::string(key) + ": '" + *v + "' is not a boolean");
}

std::vector<std::pair<std::string, std::string>> KvConfig::with_prefix(std::string_view prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : entries_)
        if (k.size() > prefix.size() && std::string_view(k).substr(0, prefix.size()) == prefix)
            out.emplace_back(k.substr(prefix.size()), v);
    return out;
}

void KvConfig::require_known(std::initializer_list<std::string_view> keys,
                             std::initializer_list<std::string_view> prefixes) const {
    for (const auto& [k, v] : entries_) {
        if (std::find(keys.begin(), keys.end(), k) != keys.end()) continue;
        if (std::any_of(prefixes.begin(), prefixes.end(), [&](std::string_view p) {
                return k.size() > p.size() && std::string_view(k).substr(0, p.size()) == p;
            }))
            continue;
        throw Error(ErrorCode::config, "unknown config key '" + k + "'");
    }
}

}  // namespace ptkit
