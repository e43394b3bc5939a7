// SPDX-License-Identifier: Apache-2.0
#include "ptkit/chat_template.hpp"

#include <algorithm>
#include <set>

#include "ptkit/error.hpp"
#include "ptkit/rng.hpp"

namespace ptkit::chat {

namespace {

constexpr std::string_view kTurnOpen = "<|im_start|>";
constexpr std::string_view kTurnClose = "<|im_end|>\n";
constexpr std::string_view kThinkOpen = "<think>\n";
constexpr std::string_view kThinkClose = "\n</think>\n";

constexpr std::string_view kCallOpen = "<TOOLCALL name=\"";
constexpr std::string_view kCallClose = "</TOOLCALL>";
constexpr std::string_view kArgOpen = "<ARG key=\"";
constexpr std::string_view kArgClose = "</ARG>";
constexpr std::string_view kAttrEnd = "\">";

[[noreturn]] void structural(std::size_t index, const std::string& what) {
    throw Error(ErrorCode::structure, "message " + std::to_string(index) + ": " + what);
}

void validate_call(std::size_t index, const ToolCall& call) {
    if (!is_identifier(call.name)) structural(index, "tool call name '" + call.name + "' is not an identifier");
    std::set<std::string_view> keys;
    for (const auto& arg : call.arguments) {
        if (!is_identifier(arg.key)) structural(index, "argument key '" + arg.key + "' is not an identifier");
        if (!keys.insert(arg.key).second) structural(index, "duplicate argument key '" + arg.key + "'");
    }
}

void render_tools(std::string& out, const std::vector<ToolDefinition>& tools) {
    if (tools.empty()) return;
    out += "\n\n<TOOLS>\n";
    for (const auto& tool : tools) {
        out += "<TOOL name=\"";
        out += tool.name;
        out += "\">";
        out += escape_closing(tool.description, "TOOL");
        out += "</TOOL>\n";
    }
    out += "</TOOLS>";
}

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view prefix) {
    return text.substr(pos, prefix.size()) == prefix;
}

// Reads an identifier terminated by `">` starting at pos; advances pos past it.
std::optional<std::string> read_attribute(std::string_view text, std::size_t& pos) {
    const auto end = text.find(kAttrEnd, pos);
    if (end == std::string_view::npos) return std::nullopt;
    auto ident = text.substr(pos, end - pos);
    if (!is_identifier(ident)) return std::nullopt;
    pos = end + kAttrEnd.size();
    return std::string(ident);
}

std::optional<ToolCall> parse_one(std::string_view text, std::size_t& pos) {
    ToolCall call;
    auto name = read_attribute(text, pos);
    if (!name) return std::nullopt;
    call.name = std::move(*name);
    while (true) {
        if (starts_with_at(text, pos, kCallClose)) {
            pos += kCallClose.size();
            return call;
        }
        if (!starts_with_at(text, pos, kArgOpen)) return std::nullopt;
        pos += kArgOpen.size();
        auto key = read_attribute(text, pos);
        if (!key) return std::nullopt;
        const auto close = text.find(kArgClose, pos);
        if (close == std::string_view::npos) return std::nullopt;
        call.arguments.push_back({std::move(*key), unescape_closing(text.substr(pos, close - pos), "ARG")});
        pos = close + kArgClose.size();
    }
}

}  // namespace

const char* to_string(Role role) noexcept {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "?";
}

const char* to_string(ReasoningMode mode) noexcept { return mode == ReasoningMode::on ? "on" : "off"; }

Role parse_role(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    if (text == "tool") return Role::tool;
    throw Error(ErrorCode::parse, "unknown role '" + std::string(text) + "'");
}

ReasoningMode parse_reasoning_mode(std::string_view text) {
    if (text == "on") return ReasoningMode::on;
    if (text == "off") return ReasoningMode::off;
    throw Error(ErrorCode::parse, "reasoning mode must be 'on' or 'off', got '" + std::string(text) + "'");
}

bool is_identifier(std::string_view text) noexcept {
    if (text.empty()) return false;
    auto head = static_cast<unsigned char>(text.front());
    if (!(std::isalpha(head) || head == '_')) return false;
    return std::all_of(text.begin() + 1, text.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return std::isalnum(u) || u == '_' || u == '.' || u == '-' || u == ':';
    });
}

std::string escape_closing(std::string_view value, std::string_view tag) {
    const std::string prefix = "</" + std::string(tag);
    std::string out;
    out.reserve(value.size());
    std::size_t pos = 0;
    while (pos < value.size()) {
        if (starts_with_at(value, pos, prefix)) {
            std::size_t q = pos + prefix.size();
            while (q < value.size() && value[q] == '\\') ++q;
            if (q < value.size() && value[q] == '>') {
                out.append(value.substr(pos, q - pos));
                out += "\\>";
                pos = q + 1;
                continue;
            }
        }
        out += value[pos++];
    }
    return out;
}

std::string unescape_closing(std::string_view value, std::string_view tag) {
    const std::string prefix = "</" + std::string(tag);
    std::string out;
    out.reserve(value.size());
    std::size_t pos = 0;
    while (pos < value.size()) {
        if (starts_with_at(value, pos, prefix)) {
            std::size_t q = pos + prefix.size();
            while (q < value.size() && value[q] == '\\') ++q;
            if (q < value.size() && value[q] == '>' && q > pos + prefix.size()) {
                out.append(value.substr(pos, q - pos - 1));
                out += '>';
                pos = q + 1;
                continue;
            }
        }
        out += value[pos++];
    }
    return out;
}

void validate(const Conversation& conversation) {
    const auto& msgs = conversation.messages;
    if (msgs.empty()) throw Error(ErrorCode::structure, "conversation has no messages");
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        const Message& m = msgs[i];
        if (i == 0 && m.role != Role::system && m.role != Role::user)
            structural(0, "conversation must open with a system or user message");
        if (m.role == Role::system && i != 0) structural(i, "system message is only allowed at index 0");
        if (i == 1 && msgs[0].role == Role::system && m.role != Role::user)
            structural(i, "system message must be followed by a user message");
        if (m.role == Role::tool && (i == 0 || (msgs[i - 1].role != Role::assistant && msgs[i - 1].role != Role::tool)))
            structural(i, "tool message must follow an assistant or tool message");
        if (m.role != Role::assistant && (m.reasoning || !m.tool_calls.empty()))
            structural(i, "reasoning and tool calls are only allowed on assistant messages");
        if (m.role != Role::system && m.tool_definitions)
            structural(i, "tool definitions are only allowed on the system message");
        for (const auto& call : m.tool_calls) validate_call(i, call);
        if (m.tool_definitions) {
            for (const auto& def : *m.tool_definitions)
                if (!is_identifier(def.name)) structural(i, "tool definition name '" + def.name + "' is not an identifier");
        }
    }
}

std::optional<std::size_t> last_user_index(const Conversation& conversation) {
    const auto& msgs = conversation.messages;
    for (std::size_t i = msgs.size(); i-- > 0;)
        if (msgs[i].role == Role::user) return i;
    return std::nullopt;
}

bool declares_tools(const Conversation& conversation) {
    return std::any_of(conversation.messages.begin(), conversation.messages.end(), [](const Message& m) {
        return m.role == Role::system && m.tool_definitions && !m.tool_definitions->empty();
    });
}

RenderedPrompt render(const Conversation& conversation) { return render(conversation, conversation.reasoning_mode); }

RenderedPrompt render(const Conversation& conversation, ReasoningMode mode) {
    validate(conversation);
    const auto last_user = last_user_index(conversation);
    RenderedPrompt out;
    for (std::size_t i = 0; i < conversation.messages.size(); ++i) {
        const Message& m = conversation.messages[i];
        out.text += kTurnOpen;
        out.text += to_string(m.role);
        out.text += '\n';
        const bool current_turn = !last_user || i > *last_user;
        if (m.role == Role::assistant && mode == ReasoningMode::on && current_turn && m.reasoning) {
            out.text += kThinkOpen;
            const std::size_t begin = out.text.size();
            out.text += *m.reasoning;
            out.included_reasoning_spans.push_back({i, begin, out.text.size()});
            out.text += kThinkClose;
        }
        out.text += m.content;
        if (m.role == Role::system && m.tool_definitions) render_tools(out.text, *m.tool_definitions);
        for (const auto& call : m.tool_calls) {
            out.text += '\n';
            out.text += serialize_tool_call(call);
        }
        out.text += kTurnClose;
    }
    return out;
}

std::string serialize_tool_call(const ToolCall& call) {
    std::string out;
    out += kCallOpen;
    out += call.name;
    out += kAttrEnd;
    for (const auto& arg : call.arguments) {
        out += kArgOpen;
        out += arg.key;
        out += kAttrEnd;
        out += escape_closing(arg.value, "ARG");
        out += kArgClose;
    }
    out += kCallClose;
    return out;
}

std::vector<ToolCall> parse_tool_calls(std::string_view text) {
    std::vector<ToolCall> calls;
    std::size_t search = 0;
    while (true) {
        const auto start = text.find(kCallOpen, search);
        if (start == std::string_view::npos) break;
        std::size_t pos = start + kCallOpen.size();
        if (auto call = parse_one(text, pos)) {
            calls.push_back(std::move(*call));
            search = pos;
        } else {
            search = start + 1;
        }
    }
    return calls;
}

std::vector<TokenSpan> whitespace_tokenize(std::string_view text) {
    std::vector<TokenSpan> spans;
    std::size_t i = 0;
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) break;
        const std::size_t begin = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        spans.push_back({begin, i});
    }
    return spans;
}

std::vector<std::string> tokens_of(std::string_view text, const Tokenizer& tokenizer) {
    std::vector<std::string> tokens;
    for (const auto& span : tokenizer(text)) tokens.emplace_back(text.substr(span.begin, span.end - span.begin));
    return tokens;
}

std::string truncate_to_tokens(std::string_view text, std::size_t budget, const Tokenizer& tokenizer) {
    const auto spans = tokenizer(text);
    if (spans.size() <= budget) return std::string(text);
    if (budget == 0) return {};
    return std::string(text.substr(0, spans[budget - 1].end));
}

StripResult strip_reasoning(std::span<const Conversation> corpus, double fraction, std::uint64_t seed,
                            std::size_t index_offset) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorCode::invalid_argument, "strip fraction must lie in [0, 1]");
    StripResult result;
    result.corpus.assign(corpus.begin(), corpus.end());
    for (std::size_t i = 0; i < result.corpus.size(); ++i) {
        const double u = to_unit(mix_seed({seed, kStripStream, index_offset + i}));
        if (u >= fraction) continue;
        auto& conv = result.corpus[i];
        for (auto& m : conv.messages) m.reasoning.reset();
        conv.reasoning_mode = ReasoningMode::off;
        ++result.stripped;
    }
    return result;
}

TruncateResult truncate_budget(std::span<const Conversation> corpus, double fraction,
                               std::span<const std::size_t> budgets, std::uint64_t seed, std::size_t index_offset,
                               const Tokenizer& tokenizer) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw Error(ErrorCode::invalid_argument, "truncation fraction must lie in [0, 1]");
    if (budgets.empty()) throw Error(ErrorCode::invalid_argument, "budget set is empty");
    if (std::find(budgets.begin(), budgets.end(), std::size_t{0}) != budgets.end())
        throw Error(ErrorCode::invalid_argument, "budgets must be positive");

    TruncateResult result;
    result.corpus.assign(corpus.begin(), corpus.end());
    for (std::size_t i = 0; i < result.corpus.size(); ++i) {
        const std::uint64_t key = mix_seed({seed, kTruncStream, index_offset + i});
        if (to_unit(key) >= fraction) continue;
        ++result.selected;
        auto& conv = result.corpus[i];
        auto last = std::find_if(conv.messages.rbegin(), conv.messages.rend(),
                                 [](const Message& m) { return m.role == Role::assistant; });
        if (last == conv.messages.rend() || !last->reasoning || tokenizer(*last->reasoning).empty()) {
            ++result.skipped_no_reasoning;
            result.skipped_ids.push_back(conv.id.empty() ? std::to_string(index_offset + i) : conv.id);
            continue;
        }
        // Second independent draw for the budget, from the same key.
        const std::size_t budget = budgets[splitmix64(key) % budgets.size()];
        std::string cut = truncate_to_tokens(*last->reasoning, budget, tokenizer);
        if (cut.size() == last->reasoning->size()) {
            ++result.within_budget;
        } else {
            last->reasoning = std::move(cut);
            ++result.truncated;
        }
    }
    return result;
}

}  // namespace ptkit::chat
