// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptkit/chat_template.hpp"

namespace ptkit::filter {

struct CheckResult {
    bool passed = true;
    std::string reason;  // empty when passed
};

/// Rejects malformed role sequences and tool calls that have no matching
/// tool definition (including calls made when no tools are declared).
CheckResult structural_check(const chat::Conversation& conv);

// -- repetition -------------------------------------------------------------

struct RepetitionConfig {
    std::size_t ngram = 8;
    std::size_t window = 512;  // tokens
    std::size_t window_threshold = 4;
    std::size_t global_threshold = 8;

    void validate() const;
};

enum class RepetitionRule { window, global };

struct RepetitionWitness {
    RepetitionRule rule = RepetitionRule::window;
    std::vector<std::string> ngram;
    std::vector<std::size_t> positions;  // start offsets of the counted occurrences
};

struct RepetitionResult {
    bool passed = true;
    bool window_violation = false;
    bool global_violation = false;
    std::optional<RepetitionWitness> witness;  // window witness preferred
};

/// An n-gram occurrence at p covers tokens [p, p + ngram). The window rule
/// fires when window_threshold occurrences of one n-gram fit in a single
/// span of `window` tokens; the global rule when an n-gram occurs at least
/// global_threshold times overall. The witness is the n-gram whose
/// violation completes at the earliest token position.
RepetitionResult repetition_check(std::span<const std::string> tokens, const RepetitionConfig& cfg);

// -- alignment patterns ---------------------------------------------------------

struct AlignmentPattern {
    std::string id;
    std::string source;
    std::regex regex;
};

AlignmentPattern make_pattern(std::string id, std::string source, bool case_insensitive = true);

/// Ships the two illustrative narrative-alignment patterns.
std::vector<AlignmentPattern> default_alignment_patterns(bool case_insensitive = true);

/// Id of the first pattern (in list order) that matches anywhere in text.
std::optional<std::string> alignment_filter(std::string_view text, std::span<const AlignmentPattern> patterns);

// -- pipeline -----------------------------------------------------------------------

struct FilterRules {
    RepetitionConfig repetition;
    std::vector<AlignmentPattern> patterns = default_alignment_patterns();
};

/// Parses a rules file of `key = value` lines. Recognized keys: ngram,
/// window, window_threshold, global_threshold, case_insensitive,
/// default_patterns (true|false) and any number of `pattern.<id> = <regex>`.
FilterRules parse_rules(std::string_view text);

struct FilterReport {
    std::size_t input_count = 0;
    std::size_t rejected_structural = 0;
    std::size_t rejected_repetition = 0;
    std::size_t rejected_alignment = 0;
    std::size_t kept = 0;
    std::map<std::string, std::vector<std::string>> per_rule_samples;

    /// Appends `other`; merging shard reports in shard order reproduces the
    /// unsharded report.
    void merge(const FilterReport& other);
    bool reconciles() const {
        return kept + rejected_structural + rejected_repetition + rejected_alignment == input_count;
    }
};

struct FilterOutcome {
    std::vector<chat::Conversation> kept;
    FilterReport report;
};

/// Assistant reasoning and content joined in message order.
std::string assistant_trajectory(const chat::Conversation& conv);

/// structural -> repetition -> alignment; each rejected sample is attributed
/// to the first rule it fails. Sample ids fall back to the global index.
FilterOutcome run_filter(std::span<const chat::Conversation> corpus, const FilterRules& rules,
                         std::size_t index_offset = 0,
                         const chat::Tokenizer& tokenizer = chat::whitespace_tokenize);

// -- tool hallucination and DPO labels ----------------------------------------------

/// True when no tools are declared and some assistant message either carries
/// a structured tool call or emits text that parses as a tool-call tag.
bool detect_tool_hallucination(const chat::Conversation& conv);

double hallucination_rate(std::span<const chat::Conversation> convs);

struct Rollout {
    std::string prompt_id;
    std::string sample_id;
    bool correct = false;
    bool tool_called = false;
    bool tools_declared = false;
};

enum class PreferenceCategory { no_tools, with_tools, hallucination_penalty };
const char* to_string(PreferenceCategory category) noexcept;

struct PreferencePair {
    std::string prompt_id;
    std::string chosen;
    std::string rejected;
    PreferenceCategory category = PreferenceCategory::no_tools;
};

struct SkippedPrompt {
    std::string prompt_id;
    std::string reason;
};

struct LabelingResult {
    std::vector<PreferencePair> pairs;
    std::vector<SkippedPrompt> skipped;
};

struct LabelingConfig {
    std::size_t pairs_per_prompt = 1;
};

/// Category per prompt: tools declared -> with_tools; otherwise any tool call
/// -> hallucination_penalty; otherwise no_tools. Chosen candidates are
/// correct rollouts (and, under hallucination_penalty, free of tool calls);
/// rejected candidates are incorrect rollouts plus, under
/// hallucination_penalty, every rollout that called a tool. Pairs are drawn
/// without replacement from chosen x rejected, keyed on (seed, prompt_id).
LabelingResult label_dpo_pairs(std::span<const Rollout> rollouts, std::uint64_t seed,
                               const LabelingConfig& cfg = {});

}  // namespace ptkit::filter
