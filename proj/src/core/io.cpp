// SPDX-License-Identifier: Apache-2.0
#include "ptkit/io.hpp"

namespace ptkit::io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::parse, what); }

const json& field(const json& j, const char* key) {
    if (!j.is_object()) bad("expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing field '") + key + "'");
    return *it;
}

const json* optional_field(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

std::string str(const json& v, const char* key) {
    if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

double num(const json& v, const char* key) {
    if (!v.is_number()) bad(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::int64_t integer(const json& v, const char* key) {
    if (!v.is_number_integer()) bad(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

bool boolean(const json& v, const char* key) {
    if (!v.is_boolean()) bad(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
}

const json& array(const json& v, const char* key) {
    if (!v.is_array()) bad(std::string("field '") + key + "' must be an array");
    return v;
}

// Ids may be written as strings or integers.
std::string id_string(const json& v, const char* key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    bad(std::string("field '") + key + "' must be a string or integer");
}

}  // namespace

std::string line(const json& j) { return j.dump() + "\n"; }

chat::Conversation conversation_from_json(const json& j) {
    chat::Conversation c;
    if (auto* id = optional_field(j, "id")) c.id = id_string(*id, "id");
    if (auto* mode = optional_field(j, "reasoning_mode")) c.reasoning_mode = chat::parse_reasoning_mode(str(*mode, "reasoning_mode"));
    for (const auto& m : array(field(j, "messages"), "messages")) {
        chat::Message msg;
        msg.role = chat::parse_role(str(field(m, "role"), "role"));
        if (auto* content = optional_field(m, "content")) msg.content = str(*content, "content");
        if (auto* r = optional_field(m, "reasoning")) msg.reasoning = str(*r, "reasoning");
        if (auto* calls = optional_field(m, "tool_calls")) {
            for (const auto& call : array(*calls, "tool_calls")) {
                chat::ToolCall tc;
                tc.name = str(field(call, "name"), "name");
                if (auto* args = optional_field(call, "arguments")) {
                    if (args->is_object()) {
                        for (const auto& [k, v] : args->items())
                            tc.arguments.push_back({k, v.is_string() ? v.get<std::string>() : v.dump()});
                    } else {
                        for (const auto& a : array(*args, "arguments"))
                            tc.arguments.push_back({str(field(a, "key"), "key"), str(field(a, "value"), "value")});
                    }
                }
                msg.tool_calls.push_back(std::move(tc));
            }
        }
        if (auto* defs = optional_field(m, "tool_definitions")) {
            std::vector<chat::ToolDefinition> list;
            for (const auto& d : array(*defs, "tool_definitions")) {
                chat::ToolDefinition td;
                td.name = str(field(d, "name"), "name");
                if (auto* desc = optional_field(d, "description")) td.description = str(*desc, "description");
                list.push_back(std::move(td));
            }
            msg.tool_definitions = std::move(list);
        }
        c.messages.push_back(std::move(msg));
    }
    return c;
}

json to_json(const chat::Conversation& c) {
    json j = json::object();
    if (!c.id.empty()) j["id"] = c.id;
    json msgs = json::array();
    for (const auto& m : c.messages) {
        json jm = json::object();
        jm["role"] = chat::to_string(m.role);
        jm["content"] = m.content;
        if (m.reasoning) jm["reasoning"] = *m.reasoning;
        if (!m.tool_calls.empty()) {
            json calls = json::array();
            for (const auto& tc : m.tool_calls) {
                json args = json::array();
                for (const auto& a : tc.arguments) args.push_back({{"key", a.key}, {"value", a.value}});
                calls.push_back({{"name", tc.name}, {"arguments", args}});
            }
            jm["tool_calls"] = calls;
        }
        if (m.tool_definitions) {
            json defs = json::array();
            for (const auto& d : *m.tool_definitions) defs.push_back({{"name", d.name}, {"description", d.description}});
            jm["tool_definitions"] = defs;
        }
        msgs.push_back(std::move(jm));
    }
    j["messages"] = std::move(msgs);
    j["reasoning_mode"] = chat::to_string(c.reasoning_mode);
    return j;
}

json to_json(const chat::RenderedPrompt& p) {
    json spans = json::array();
    for (const auto& s : p.included_reasoning_spans)
        spans.push_back({{"message_index", s.message_index}, {"begin", s.begin}, {"end", s.end}});
    return {{"text", p.text}, {"included_reasoning_spans", spans}};
}

reward::ResponseGroup group_from_json(const json& j) {
    reward::ResponseGroup g;
    g.prompt_id = id_string(field(j, "prompt_id"), "prompt_id");
    for (const auto& r : array(field(j, "responses"), "responses")) {
        reward::Response resp;
        resp.id = integer(field(r, "id"), "id");
        resp.think_len = integer(field(r, "think_len"), "think_len");
        resp.answer_len = integer(field(r, "answer_len"), "answer_len");
        resp.total_len = integer(field(r, "total_len"), "total_len");
        g.responses.push_back(resp);
    }
    return g;
}

reward::PairVerdict verdict_from_json(const json& j) {
    reward::PairVerdict v;
    v.first = integer(field(j, "first"), "first");
    v.second = integer(field(j, "second"), "second");
    v.s_i = num(field(j, "s_i"), "s_i");
    v.s_j = num(field(j, "s_j"), "s_j");
    v.s_r = num(field(j, "s_r"), "s_r");
    return v;
}

json to_json(const reward::ScoredResponse& s) {
    return {{"id", s.id},
            {"base", s.reward.base},
            {"length_adj_think", s.reward.length_adj_think},
            {"length_adj_answer", s.reward.length_adj_answer},
            {"bonus", s.reward.bonus},
            {"final", s.reward.final},
            {"advantage", s.advantage},
            {"masked", s.masked}};
}

curriculum::TaskProfile profile_from_json(const json& j) {
    curriculum::TaskProfile p;
    p.task_id = id_string(field(j, "task_id"), "task_id");
    p.domain = str(field(j, "domain"), "domain");
    p.pass_rate = num(field(j, "pass_rate"), "pass_rate");
    return p;
}

json to_json(const curriculum::BatchPlan& plan) {
    json counts = json::object();
    for (const auto& [d, n] : plan.domain_counts) counts[d] = n;
    return {{"step", plan.step},
            {"target_mean", plan.target_mean},
            {"domain_counts", counts},
            {"with_replacement", plan.with_replacement()},
            {"replacement_domains", plan.replacement_domains},
            {"entries", plan.entries}};
}

filter::Rollout rollout_from_json(const json& j) {
    filter::Rollout r;
    r.prompt_id = id_string(field(j, "prompt_id"), "prompt_id");
    r.sample_id = id_string(field(j, "sample_id"), "sample_id");
    r.correct = boolean(field(j, "correct"), "correct");
    if (auto* v = optional_field(j, "tool_called")) r.tool_called = boolean(*v, "tool_called");
    if (auto* v = optional_field(j, "tools_declared")) r.tools_declared = boolean(*v, "tools_declared");
    return r;
}

json to_json(const filter::PreferencePair& p) {
    return {{"prompt_id", p.prompt_id},
            {"chosen", p.chosen},
            {"rejected", p.rejected},
            {"category", filter::to_string(p.category)}};
}

json to_json(const filter::FilterReport& r) {
    json samples = json::object();
    for (const auto& [rule, ids] : r.per_rule_samples) samples[rule] = ids;
    return {{"input_count", r.input_count},
            {"kept", r.kept},
            {"rejected_structural", r.rejected_structural},
            {"rejected_repetition", r.rejected_repetition},
            {"rejected_alignment", r.rejected_alignment},
            {"reconciles", r.reconciles()},
            {"per_rule_samples", samples}};
}

filter::FilterReport filter_report_from_json(const json& j) {
    filter::FilterReport r;
    r.input_count = static_cast<std::size_t>(integer(field(j, "input_count"), "input_count"));
    r.kept = static_cast<std::size_t>(integer(field(j, "kept"), "kept"));
    r.rejected_structural = static_cast<std::size_t>(integer(field(j, "rejected_structural"), "rejected_structural"));
    r.rejected_repetition = static_cast<std::size_t>(integer(field(j, "rejected_repetition"), "rejected_repetition"));
    r.rejected_alignment = static_cast<std::size_t>(integer(field(j, "rejected_alignment"), "rejected_alignment"));
    if (auto* s = optional_field(j, "per_rule_samples"))
        for (const auto& [rule, ids] : s->items())
            for (const auto& id : array(ids, "per_rule_samples")) r.per_rule_samples[rule].push_back(str(id, "id"));
    return r;
}

json to_json(const quant::PrecisionPlan& plan) {
    json layers = json::array();
    for (std::size_t i = 0; i < plan.per_layer.size(); ++i) {
        const auto& l = plan.per_layer[i];
        layers.push_back(
            {{"index", i}, {"kind", quant::to_string(l.kind)}, {"weights", quant::to_string(l.weights)}, {"note", l.note}});
    }
    json summary = json::object();
    summary["bf16_layers"] = plan.count(quant::Precision::bf16);
    summary["fp8_layers"] = plan.count(quant::Precision::fp8);
    summary["bf16_attention"] = plan.count(quant::LayerKind::attention, quant::Precision::bf16);
    summary["bf16_mamba"] = plan.count(quant::LayerKind::mamba, quant::Precision::bf16);
    return {{"per_layer", layers},
            {"kv_cache", quant::to_string(plan.kv_cache)},
            {"conv1d", quant::to_string(plan.conv1d)},
            {"summary", summary},
            {"warnings", plan.warnings}};
}

json to_json(const quant::MemoryEstimate& m) {
    json bytes = json::object();
    for (const auto& [k, v] : m.bytes) bytes[k] = v;
    return {{"bytes", bytes},
            {"layer_weight_bytes", m.layer_weight_bytes},
            {"total_bytes", m.total_bytes},
            {"total_params", m.total_params},
            {"kv_cache_bytes_per_token", m.kv_cache_bytes_per_token}};
}

json to_json(const router::SimulationReport& r, bool include_trajectories) {
    json j = {{"steps", r.window_ratio.size()},
              {"final_window_ratio", r.final_window_ratio},
              {"final_step_ratio", r.step_ratio.empty() ? 0.0 : r.step_ratio.back()},
              {"first_step_below_target", r.first_step_below_target},
              {"step_ratio", r.step_ratio},
              {"window_ratio", r.window_ratio},
              {"step_lb_loss", r.step_lb_loss},
              {"final_bias", r.final_bias}};
    if (include_trajectories) {
        j["step_loads"] = r.step_loads;
        j["bias_trajectory"] = r.bias_trajectory;
    }
    return j;
}

}  // namespace ptkit::io
