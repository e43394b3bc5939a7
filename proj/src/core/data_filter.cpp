// SPDX-License-Identifier: Apache-2.0
#include "ptkit/data_filter.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "ptkit/config.hpp"
#include "ptkit/error.hpp"
#include "ptkit/rng.hpp"

namespace ptkit::filter {

using chat::Conversation;
using chat::Message;
using chat::Role;

namespace {

std::string sample_id(const Conversation& conv, std::size_t global_index) {
    return conv.id.empty() ? std::to_string(global_index) : conv.id;
}

std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

}  // namespace

CheckResult structural_check(const Conversation& conv) {
    try {
        chat::validate(conv);
    } catch (const Error& e) {
        return {false, e.what()};
    }
    std::set<std::string_view> declared;
    for (const auto& m : conv.messages)
        if (m.role == Role::system && m.tool_definitions)
            for (const auto& def : *m.tool_definitions) declared.insert(def.name);
    for (std::size_t i = 0; i < conv.messages.size(); ++i) {
        for (const auto& call : conv.messages[i].tool_calls) {
            if (declared.empty())
                return {false, "message " + std::to_string(i) + ": tool call '" + call.name +
                                   "' but no tool definitions are declared"};
            if (!declared.contains(call.name))
                return {false, "message " + std::to_string(i) + ": tool call '" + call.name +
                                   "' has no matching tool definition"};
        }
    }
    return {};
}

void RepetitionConfig::validate() const {
    if (ngram < 2) throw Error(ErrorCode::config, "ngram must be >= 2");
    if (window_threshold < 2 || global_threshold < 2) throw Error(ErrorCode::config, "thresholds must be >= 2");
    if (window < ngram) throw Error(ErrorCode::config, "window must be at least ngram tokens");
}

RepetitionResult repetition_check(std::span<const std::string> tokens, const RepetitionConfig& cfg) {
    cfg.validate();
    RepetitionResult result;
    const std::size_t n = cfg.ngram;
    if (tokens.size() < n) return result;

    std::unordered_map<std::string_view, int> vocab;
    std::vector<int> ids(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i)
        ids[i] = vocab.emplace(tokens[i], static_cast<int>(vocab.size())).first->second;

    std::map<std::vector<int>, std::vector<std::size_t>> occurrences;
    for (std::size_t p = 0; p + n <= ids.size(); ++p)
        occurrences[std::vector<int>(ids.begin() + static_cast<std::ptrdiff_t>(p),
                                     ids.begin() + static_cast<std::ptrdiff_t>(p + n))]
            .push_back(p);

    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::size_t best_window = kNone, best_global = kNone;
    std::vector<std::size_t> window_positions, global_positions;
    const std::size_t wt = cfg.window_threshold, gt = cfg.global_threshold;

    for (const auto& [gram, pos] : occurrences) {
        for (std::size_t j = wt - 1; j < pos.size(); ++j) {
            const std::size_t first = pos[j - (wt - 1)];
            if (pos[j] + n - first <= cfg.window) {
                if (pos[j] < best_window) {
                    best_window = pos[j];
                    window_positions.assign(pos.begin() + static_cast<std::ptrdiff_t>(j - (wt - 1)),
                                            pos.begin() + static_cast<std::ptrdiff_t>(j + 1));
                }
                break;
            }
        }
        if (pos.size() >= gt && pos[gt - 1] < best_global) {
            best_global = pos[gt - 1];
            global_positions.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(gt));
        }
    }

    result.window_violation = best_window != kNone;
    result.global_violation = best_global != kNone;
    result.passed = !result.window_violation && !result.global_violation;
    if (!result.passed) {
        RepetitionWitness w;
        w.rule = result.window_violation ? RepetitionRule::window : RepetitionRule::global;
        w.positions = result.window_violation ? window_positions : global_positions;
        const std::size_t start = w.positions.front();
        w.ngram.assign(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                       tokens.begin() + static_cast<std::ptrdiff_t>(start + n));
        result.witness = std::move(w);
    }
    return result;
}

AlignmentPattern make_pattern(std::string id, std::string source, bool case_insensitive) {
    auto flags = std::regex::ECMAScript;
    if (case_insensitive) flags |= std::regex::icase;
    try {
        std::regex re(source, flags);
        return {std::move(id), std::move(source), std::move(re)};
    } catch (const std::regex_error& e) {
        throw Error(ErrorCode::config, "pattern '" + id + "' does not compile: " + e.what());
    }
}

std::vector<AlignmentPattern> default_alignment_patterns(bool case_insensitive) {
    std::vector<AlignmentPattern> out;
    out.push_back(make_pattern("our-nation-party", R"(\bour\s+(nation|party)\b)", case_insensitive));
    out.push_back(make_pattern("our-values", R"(\bour\s+values\b)", case_insensitive));
    return out;
}

std::optional<std::string> alignment_filter(std::string_view text, std::span<const AlignmentPattern> patterns) {
    for (const auto& p : patterns)
        if (std::regex_search(text.begin(), text.end(), p.regex)) return p.id;
    return std::nullopt;
}

FilterRules parse_rules(std::string_view text) {
    const auto kv = KvConfig::parse(text);
    kv.require_known({"ngram", "window", "window_threshold", "global_threshold", "case_insensitive", "default_patterns"},
                     {"pattern."});
    FilterRules rules;
    rules.repetition.ngram = kv.get_size("ngram", rules.repetition.ngram);
    rules.repetition.window = kv.get_size("window", rules.repetition.window);
    rules.repetition.window_threshold = kv.get_size("window_threshold", rules.repetition.window_threshold);
    rules.repetition.global_threshold = kv.get_size("global_threshold", rules.repetition.global_threshold);
    rules.repetition.validate();
    const bool icase = kv.get_bool("case_insensitive", true);
    rules.patterns.clear();
    if (kv.get_bool("default_patterns", true)) rules.patterns = default_alignment_patterns(icase);
    for (auto& [id, source] : kv.with_prefix("pattern.")) rules.patterns.push_back(make_pattern(id, source, icase));
    return rules;
}

void FilterReport::merge(const FilterReport& other) {
    input_count += other.input_count;
    rejected_structural += other.rejected_structural;
    rejected_repetition += other.rejected_repetition;
    rejected_alignment += other.rejected_alignment;
    kept += other.kept;
    for (const auto& [rule, ids] : other.per_rule_samples) {
        auto& dst = per_rule_samples[rule];
        dst.insert(dst.end(), ids.begin(), ids.end());
    }
}

std::string assistant_trajectory(const Conversation& conv) {
    std::string out;
    for (const auto& m : conv.messages) {
        if (m.role != Role::assistant) continue;
        for (const std::string* part : {m.reasoning ? &*m.reasoning : nullptr, &m.content}) {
            if (!part || part->empty()) continue;
            if (!out.empty()) out += '\n';
            out += *part;
        }
    }
    return out;
}

FilterOutcome run_filter(std::span<const Conversation> corpus, const FilterRules& rules, std::size_t index_offset,
                         const chat::Tokenizer& tokenizer) {
    FilterOutcome outcome;
    FilterReport& report = outcome.report;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Conversation& conv = corpus[i];
        ++report.input_count;
        const std::string id = sample_id(conv, index_offset + i);

        if (!structural_check(conv).passed) {
            ++report.rejected_structural;
            report.per_rule_samples["structural"].push_back(id);
            continue;
        }
        const std::string trajectory = assistant_trajectory(conv);
        const auto tokens = chat::tokens_of(trajectory, tokenizer);
        if (!repetition_check(tokens, rules.repetition).passed) {
            ++report.rejected_repetition;
            report.per_rule_samples["repetition"].push_back(id);
            continue;
        }
        if (alignment_filter(trajectory, rules.patterns)) {
            ++report.rejected_alignment;
            report.per_rule_samples["alignment"].push_back(id);
            continue;
        }
        ++report.kept;
        outcome.kept.push_back(conv);
    }
    return outcome;
}

bool detect_tool_hallucination(const Conversation& conv) {
    if (chat::declares_tools(conv)) return false;
    return std::any_of(conv.messages.begin(), conv.messages.end(), [](const Message& m) {
        if (m.role != Role::assistant) return false;
        if (!m.tool_calls.empty()) return true;
        return !chat::parse_tool_calls(m.content).empty();
    });
}

double hallucination_rate(std::span<const Conversation> convs) {
    if (convs.empty()) throw Error(ErrorCode::domain, "hallucination rate of an empty set");
    const auto hits = std::count_if(convs.begin(), convs.end(), detect_tool_hallucination);
    return static_cast<double>(hits) / static_cast<double>(convs.size());
}

const char* to_string(PreferenceCategory category) noexcept {
    switch (category) {
        case PreferenceCategory::no_tools: return "no_tools";
        case PreferenceCategory::with_tools: return "with_tools";
        case PreferenceCategory::hallucination_penalty: return "hallucination_penalty";
    }
    return "?";
}

LabelingResult label_dpo_pairs(std::span<const Rollout> rollouts, std::uint64_t seed, const LabelingConfig& cfg) {
    if (cfg.pairs_per_prompt == 0) throw Error(ErrorCode::config, "pairs_per_prompt must be positive");

    // Group by prompt in order of first appearance.
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const Rollout*>> groups;
    for (const auto& r : rollouts) {
        auto [it, inserted] = groups.try_emplace(r.prompt_id);
        if (inserted) order.push_back(r.prompt_id);
        it->second.push_back(&r);
    }

    LabelingResult result;
    for (const auto& prompt : order) {
        const auto& group = groups.at(prompt);
        if (group.size() < 2) {
            result.skipped.push_back({prompt, "fewer than 2 rollouts"});
            continue;
        }
        std::set<std::string_view> ids;
        for (const Rollout* r : group)
            if (!ids.insert(r->sample_id).second)
                throw Error(ErrorCode::invalid_argument,
                            "prompt '" + prompt + "': duplicate sample id '" + r->sample_id + "'");
        const bool declared = group.front()->tools_declared;
        if (std::any_of(group.begin(), group.end(), [&](const Rollout* r) { return r->tools_declared != declared; })) {
            result.skipped.push_back({prompt, "rollouts disagree on whether tools are declared"});
            continue;
        }
        const bool any_call = std::any_of(group.begin(), group.end(), [](const Rollout* r) { return r->tool_called; });
        const PreferenceCategory category = declared   ? PreferenceCategory::with_tools
                                            : any_call ? PreferenceCategory::hallucination_penalty
                                                       : PreferenceCategory::no_tools;

        std::vector<const Rollout*> chosen, rejected;
        for (const Rollout* r : group) {
            const bool violation = category == PreferenceCategory::hallucination_penalty && r->tool_called;
            if (violation || !r->correct)
                rejected.push_back(r);
            else
                chosen.push_back(r);
        }
        if (chosen.empty() || rejected.empty()) {
            result.skipped.push_back({prompt, "no preference signal"});
            continue;
        }

        const std::size_t total = chosen.size() * rejected.size();
        const std::size_t want = std::min(cfg.pairs_per_prompt, total);
        std::vector<std::size_t> cells(total);
        for (std::size_t c = 0; c < total; ++c) cells[c] = c;
        Rng rng(mix_seed({seed, hash_string(prompt)}));
        for (std::size_t q = 0; q < want; ++q) std::swap(cells[q], cells[q + rng.below(total - q)]);
        for (std::size_t q = 0; q < want; ++q) {
            const auto* c = chosen[cells[q] / rejected.size()];
            const auto* r = rejected[cells[q] % rejected.size()];
            result.pairs.push_back({prompt, c->sample_id, r->sample_id, category});
        }
    }
    return result;
}

}  // namespace ptkit::filter
