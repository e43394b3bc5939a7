// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptkit::chat {

enum class Role { system, user, assistant, tool };
enum class ReasoningMode { on, off };

const char* to_string(Role role) noexcept;
const char* to_string(ReasoningMode mode) noexcept;
Role parse_role(std::string_view text);
ReasoningMode parse_reasoning_mode(std::string_view text);

struct ToolArgument {
    std::string key;
    std::string value;
    bool operator==(const ToolArgument&) const = default;
};

struct ToolCall {
    std::string name;
    std::vector<ToolArgument> arguments;
    bool operator==(const ToolCall&) const = default;
};

struct ToolDefinition {
    std::string name;
    std::string description;
    bool operator==(const ToolDefinition&) const = default;
};

struct Message {
    Role role = Role::user;
    std::string content;
    std::optional<std::string> reasoning;                       // assistant only
    std::vector<ToolCall> tool_calls;                           // assistant only
    std::optional<std::vector<ToolDefinition>> tool_definitions;  // system only
    bool operator==(const Message&) const = default;
};

struct Conversation {
    std::string id;  // optional sample id, carried through pipelines
    std::vector<Message> messages;
    ReasoningMode reasoning_mode = ReasoningMode::on;
    bool operator==(const Conversation&) const = default;
};

struct ReasoningSpan {
    std::size_t message_index;
    std::size_t begin;  // byte offsets into RenderedPrompt::text
    std::size_t end;
    bool operator==(const ReasoningSpan&) const = default;
};

struct RenderedPrompt {
    std::string text;
    std::vector<ReasoningSpan> included_reasoning_spans;
};

/// Checks role ordering and per-role field placement. Throws
/// Error(structure) naming the first offending message index.
void validate(const Conversation& conversation);

/// Index of the last user message; turn boundaries are user messages.
std::optional<std::size_t> last_user_index(const Conversation& conversation);

/// True when some system message declares a non-empty tool list. An empty
/// list and an absent list are both "no tools".
bool declares_tools(const Conversation& conversation);

/// Renders with the conversation's own reasoning mode. Reasoning is emitted
/// only for assistant messages after the last user message, and only when
/// the mode is on.
RenderedPrompt render(const Conversation& conversation);
RenderedPrompt render(const Conversation& conversation, ReasoningMode mode);

// Tool-call tag grammar:
//   <TOOLCALL name="NAME"><ARG key="KEY">VALUE</ARG>...</TOOLCALL>
// NAME and KEY are identifiers. Inside VALUE only the closing sequence is
// escaped: "</ARG" + k backslashes + ">" is written with k+1 backslashes.
std::string serialize_tool_call(const ToolCall& call);
std::vector<ToolCall> parse_tool_calls(std::string_view text);
bool is_identifier(std::string_view text) noexcept;
std::string escape_closing(std::string_view value, std::string_view tag);
std::string unescape_closing(std::string_view value, std::string_view tag);

// -- tokenization hook ------------------------------------------------------

struct TokenSpan {
    std::size_t begin;
    std::size_t end;
};

/// Maps text to token byte ranges, in order and non-overlapping.
using Tokenizer = std::function<std::vector<TokenSpan>(std::string_view)>;

std::vector<TokenSpan> whitespace_tokenize(std::string_view text);
std::vector<std::string> tokens_of(std::string_view text, const Tokenizer& tokenizer);

// -- SFT reasoning control ----------------------------------------------------

inline constexpr std::uint64_t kStripStream = 0x5354524950ULL;  // "STRIP"
inline constexpr std::uint64_t kTruncStream = 0x5452554e43ULL;  // "TRUNC"

struct StripResult {
    std::vector<Conversation> corpus;
    std::size_t stripped = 0;
};

/// Each sample is selected independently with probability `fraction`, keyed
/// on (seed, index_offset + position). Selected samples lose all assistant
/// reasoning and switch to reasoning mode off.
StripResult strip_reasoning(std::span<const Conversation> corpus, double fraction,
                            std::uint64_t seed, std::size_t index_offset = 0);

inline const std::vector<std::size_t> kDefaultBudgets = {1024, 2048, 4096, 8192, 16384};

struct TruncateResult {
    std::vector<Conversation> corpus;
    std::size_t selected = 0;
    std::size_t truncated = 0;             // reasoning actually shortened
    std::size_t within_budget = 0;         // selected, already short enough
    std::size_t skipped_no_reasoning = 0;  // selected, nothing to truncate
    std::vector<std::string> skipped_ids;
};

/// Truncates the reasoning of the final assistant message of a seeded subset
/// to a budget drawn uniformly from `budgets`. The answer text is untouched.
TruncateResult truncate_budget(std::span<const Conversation> corpus, double fraction,
                               std::span<const std::size_t> budgets, std::uint64_t seed,
                               std::size_t index_offset = 0,
                               const Tokenizer& tokenizer = whitespace_tokenize);

/// First `budget` tokens of `text`, cut at the end of the last kept token.
std::string truncate_to_tokens(std::string_view text, std::size_t budget,
                               const Tokenizer& tokenizer = whitespace_tokenize);

}  // namespace ptkit::chat
