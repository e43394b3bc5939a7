// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ptkit/chat_template.hpp"
#include "ptkit/curriculum.hpp"
#include "ptkit/data_filter.hpp"
#include "ptkit/error.hpp"
#include "ptkit/quant.hpp"
#include "ptkit/reward.hpp"
#include "ptkit/router.hpp"

namespace ptkit::io {

using json = nlohmann::ordered_json;

/// Calls `fn(line_json, line_number)` for each non-blank line. Line numbers
/// start at line_offset + 1. Decoding failures become Error(parse) with the
/// line set; errors thrown by `fn` get the line attached if they lack one.
template <class Fn>
void for_each_jsonl(std::string_view text, long line_offset, Fn&& fn) {
    long line_no = line_offset;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": malformed JSON: " + e.what(), line_no);
        }
        try {
            fn(j, line_no);
        } catch (const Error& e) {
            if (e.line() != 0) throw;
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
}

/// Compact single-line dump terminated by '\n'.
std::string line(const json& j);

chat::Conversation conversation_from_json(const json& j);
json to_json(const chat::Conversation& conv);
json to_json(const chat::RenderedPrompt& prompt);

reward::ResponseGroup group_from_json(const json& j);
/// Verdicts may carry an optional "prompt_id".
reward::PairVerdict verdict_from_json(const json& j);
json to_json(const reward::ScoredResponse& s);

curriculum::TaskProfile profile_from_json(const json& j);
json to_json(const curriculum::BatchPlan& plan);

filter::Rollout rollout_from_json(const json& j);
json to_json(const filter::PreferencePair& pair);
json to_json(const filter::FilterReport& report);
filter::FilterReport filter_report_from_json(const json& j);

json to_json(const quant::PrecisionPlan& plan);
json to_json(const quant::MemoryEstimate& m);

json to_json(const router::SimulationReport& r, bool include_trajectories);

}  // namespace ptkit::io
