// SPDX-License-Identifier: Apache-2.0
#include "ptkit/ptkit.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>
#include <vector>

#include "ptkit/config.hpp"
#include "ptkit/io.hpp"

using namespace ptkit;
using io::json;

namespace {

thread_local std::string g_error;
thread_local long g_error_line = 0;

ptk_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return PTK_E_INVALID_ARGUMENT;
        case ErrorCode::parse: return PTK_E_PARSE;
        case ErrorCode::structure: return PTK_E_STRUCTURE;
        case ErrorCode::coverage: return PTK_E_COVERAGE;
        case ErrorCode::domain: return PTK_E_DOMAIN;
        case ErrorCode::shape: return PTK_E_SHAPE;
        case ErrorCode::frozen: return PTK_E_FROZEN;
        case ErrorCode::config: return PTK_E_CONFIG;
    }
    return PTK_E_INTERNAL;
}

ptk_status fail(ptk_status s, std::string msg, long line = 0) {
    g_error = std::move(msg);
    g_error_line = line;
    return s;
}

template <class Fn>
ptk_status guard(Fn&& fn) {
    try {
        fn();
        g_error.clear();
        g_error_line = 0;
        return PTK_OK;
    } catch (const Error& e) {
        return fail(to_status(e.code()), e.what(), e.line());
    } catch (const json::exception& e) {
        return fail(PTK_E_PARSE, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PTK_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PTK_E_INTERNAL, e.what());
    } catch (...) {
        return fail(PTK_E_INTERNAL, "unknown failure");
    }
}

void require(const void* p, const char* what) {
    if (!p) throw Error(ErrorCode::invalid_argument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size() + 1);
    return p;
}

// Both outputs are allocated only after all work succeeded.
void emit(char** out_a, const std::string& a, char** out_b = nullptr, const std::string& b = {}) {
    char* pa = dup(a);
    if (out_b) {
        char* pb = nullptr;
        try {
            pb = dup(b);
        } catch (...) {
            std::free(pa);
            throw;
        }
        *out_b = pb;
    }
    *out_a = pa;
}

KvConfig kv_of(const char* text) { return KvConfig::parse(text ? text : ""); }

std::vector<chat::Conversation> read_conversations(const char* jsonl, long line_offset) {
    std::vector<chat::Conversation> out;
    io::for_each_jsonl(jsonl, line_offset, [&](const json& j, long) { out.push_back(io::conversation_from_json(j)); });
    return out;
}

void merge_into(json& a, const json& b, const std::string& path) {
    if (a.is_object() && b.is_object()) {
        for (const auto& [k, v] : b.items()) {
            if (a.contains(k))
                merge_into(a[k], v, path + "." + k);
            else
                a[k] = v;
        }
    } else if (a.is_array() && b.is_array()) {
        for (const auto& v : b) a.push_back(v);
    } else if (a.is_number_unsigned() && b.is_number_unsigned()) {
        a = a.get<std::uint64_t>() + b.get<std::uint64_t>();
    } else if (a.is_number_integer() && b.is_number_integer()) {
        a = a.get<std::int64_t>() + b.get<std::int64_t>();
    } else if (a.is_boolean() && b.is_boolean()) {
        a = a.get<bool>() && b.get<bool>();
    } else if (a.is_string() && b.is_string() && a == b) {
    } else {
        throw Error(ErrorCode::invalid_argument, "reports cannot be merged at '" + path + "'");
    }
}

}  // namespace

struct ptk_curriculum {
    std::vector<curriculum::TaskProfile> profiles;
    curriculum::CurriculumConfig cfg;
    std::map<std::string, double> pass_rate;
};

struct ptk_router {
    router::Router impl;
};

extern "C" {

const char* ptk_version(void) { return "0.1.0"; }

const char* ptk_status_name(ptk_status s) {
    switch (s) {
        case PTK_OK: return "ok";
        case PTK_E_INVALID_ARGUMENT: return "invalid_argument";
        case PTK_E_PARSE: return "parse";
        case PTK_E_STRUCTURE: return "structure";
        case PTK_E_COVERAGE: return "coverage";
        case PTK_E_DOMAIN: return "domain";
        case PTK_E_SHAPE: return "shape";
        case PTK_E_FROZEN: return "frozen";
        case PTK_E_CONFIG: return "config";
        case PTK_E_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* ptk_last_error_message(void) { return g_error.c_str(); }
long ptk_last_error_line(void) { return g_error_line; }
void ptk_free(char* p) { std::free(p); }

// ---- judge reward

void ptk_genrm_config_default(ptk_genrm_config* cfg) {
    if (cfg) *cfg = {reward::GenRmRewardConfig{}.c1, reward::GenRmRewardConfig{}.c2};
}

ptk_status ptk_genrm_config_parse(const char* text, ptk_genrm_config* cfg) {
    return guard([&] {
        require(cfg, "cfg");
        const auto kv = kv_of(text);
        reward::GenRmRewardConfig c;
        c.c1 = kv.get_double("c1", cfg->c1);
        c.c2 = kv.get_double("c2", cfg->c2);
        if (c.c1 < 0 || c.c2 < 0) throw Error(ErrorCode::config, "c1 and c2 must be non-negative");
        *cfg = {c.c1, c.c2};
    });
}

ptk_status ptk_genrm_reward(const ptk_judge_prediction* pred, const ptk_judge_truth* truth, const ptk_genrm_config* cfg,
                            double* out) {
    return guard([&] {
        require(pred, "pred");
        require(truth, "truth");
        require(out, "out");
        reward::GenRmRewardConfig c;
        if (cfg) c = {cfg->c1, cfg->c2};
        *out = reward::genrm_reward({pred->p_h1, pred->p_h2, pred->p_r, pred->format_violation != 0},
                                    {truth->g_h1, truth->g_h2, truth->g_r}, c);
    });
}

ptk_status ptk_swap_truth(const ptk_judge_truth* in, ptk_judge_truth* out) {
    return guard([&] {
        require(in, "in");
        require(out, "out");
        const auto t = reward::position_swap(reward::JudgeGroundTruth{in->g_h1, in->g_h2, in->g_r});
        *out = {t.g_h1, t.g_h2, t.g_r};
    });
}

// ---- group primitives

ptk_status ptk_circular_schedule(size_t n, size_t* firsts, size_t* seconds) {
    return guard([&] {
        require(firsts, "firsts");
        require(seconds, "seconds");
        const auto pairs = reward::circular_schedule(n);
        for (size_t i = 0; i < pairs.size(); ++i) {
            firsts[i] = pairs[i].first;
            seconds[i] = pairs[i].second;
        }
    });
}

ptk_status ptk_tiebreak(const ptk_verdict* in, ptk_verdict* out) {
    return guard([&] {
        require(in, "in");
        require(out, "out");
        const auto v = reward::tiebreak({in->first, in->second, in->s_i, in->s_j, in->s_r});
        *out = {v.first, v.second, v.s_i, v.s_j, v.s_r};
    });
}

ptk_status ptk_length_weights(const int64_t* lengths, size_t n, double* out) {
    return guard([&] {
        if (n) {
            require(lengths, "lengths");
            require(out, "out");
        }
        const auto w = reward::length_weights({lengths, n});
        std::copy(w.begin(), w.end(), out);
    });
}

ptk_status ptk_grpo_advantages(const double* rewards, size_t n, double eps, double* out) {
    return guard([&] {
        if (n) {
            require(rewards, "rewards");
            require(out, "out");
        }
        const auto a = reward::grpo_advantages({rewards, n}, eps);
        std::copy(a.begin(), a.end(), out);
    });
}

ptk_status ptk_overlong_mask(const int64_t* lengths, size_t n, int64_t max_len, int* out) {
    return guard([&] {
        if (n) {
            require(lengths, "lengths");
            require(out, "out");
        }
        const auto m = reward::overlong_mask({lengths, n}, max_len);
        for (size_t i = 0; i < n; ++i) out[i] = m[i] ? 1 : 0;
    });
}

// ---- schedule

void ptk_wsd_config_default(ptk_wsd_config* cfg) {
    if (!cfg) return;
    const curriculum::WsdConfig d;
    *cfg = {d.warmup_tokens, d.total_tokens, d.stable_fraction, d.lr_max, d.lr_min};
}

ptk_status ptk_wsd_config_parse(const char* text, ptk_wsd_config* cfg) {
    return guard([&] {
        require(cfg, "cfg");
        const auto c = curriculum::wsd_config_from(kv_of(text));
        *cfg = {c.warmup_tokens, c.total_tokens, c.stable_fraction, c.lr_max, c.lr_min};
    });
}

ptk_status ptk_wsd_lr(const ptk_wsd_config* cfg, double tokens_seen, double* out) {
    return guard([&] {
        require(cfg, "cfg");
        require(out, "out");
        *out = curriculum::wsd_lr(
            tokens_seen, {cfg->warmup_tokens, cfg->total_tokens, cfg->stable_fraction, cfg->lr_max, cfg->lr_min});
    });
}

// ---- pipelines

ptk_status ptk_report_merge(const char* a, const char* b, char** out_report) {
    return guard([&] {
        require(a, "a");
        require(b, "b");
        require(out_report, "out_report");
        json ja = json::parse(a), jb = json::parse(b);
        merge_into(ja, jb, "$");
        emit(out_report, ja.dump());
    });
}

ptk_status ptk_render_jsonl(const char* jsonl, const char* mode, long line_offset, char** out_jsonl) {
    return guard([&] {
        require(jsonl, "jsonl");
        require(out_jsonl, "out_jsonl");
        std::optional<chat::ReasoningMode> forced;
        if (mode) forced = chat::parse_reasoning_mode(mode);
        std::string out;
        io::for_each_jsonl(jsonl, line_offset, [&](const json& j, long) {
            const auto conv = io::conversation_from_json(j);
            const auto prompt = forced ? chat::render(conv, *forced) : chat::render(conv);
            json o = json::object();
            if (!conv.id.empty()) o["id"] = conv.id;
            o.update(io::to_json(prompt));
            out += io::line(o);
        });
        emit(out_jsonl, out);
    });
}

void ptk_sft_options_default(ptk_sft_options* opts) {
    if (opts) *opts = {0.10, 0.03, 0, nullptr, 0, 0, 0};
}

ptk_status ptk_sft_prep_jsonl(const char* jsonl, const ptk_sft_options* opts, char** out_jsonl, char** out_report) {
    return guard([&] {
        require(jsonl, "jsonl");
        require(opts, "opts");
        require(out_jsonl, "out_jsonl");
        require(out_report, "out_report");
        const auto corpus = read_conversations(jsonl, opts->line_offset);
        std::vector<std::size_t> budgets = chat::kDefaultBudgets;
        if (opts->budgets) budgets.assign(opts->budgets, opts->budgets + opts->n_budgets);
        const auto stripped = chat::strip_reasoning(corpus, opts->strip_fraction, opts->seed, opts->index_offset);
        const auto truncated =
            chat::truncate_budget(stripped.corpus, opts->trunc_fraction, budgets, opts->seed, opts->index_offset);
        std::string out;
        for (const auto& c : truncated.corpus) out += io::line(io::to_json(c));
        const json report = {{"input_count", corpus.size()},
                             {"stripped", stripped.stripped},
                             {"trunc_selected", truncated.selected},
                             {"truncated", truncated.truncated},
                             {"within_budget", truncated.within_budget},
                             {"skipped_no_reasoning", truncated.skipped_no_reasoning},
                             {"skipped_ids", truncated.skipped_ids}};
        emit(out_jsonl, out, out_report, report.dump());
    });
}

ptk_status ptk_score_groups_jsonl(const char* groups_jsonl, const char* verdicts_jsonl, const char* config_text,
                                  long group_line_offset, char** out_jsonl, char** out_report) {
    return guard([&] {
        require(groups_jsonl, "groups_jsonl");
        require(verdicts_jsonl, "verdicts_jsonl");
        require(out_jsonl, "out_jsonl");
        require(out_report, "out_report");
        const auto cfg = reward::scoring_config_from(kv_of(config_text));

        std::vector<std::pair<reward::ResponseGroup, long>> groups;
        io::for_each_jsonl(groups_jsonl, group_line_offset,
                           [&](const json& j, long line) { groups.emplace_back(io::group_from_json(j), line); });

        std::map<std::string, std::vector<reward::PairVerdict>> by_prompt;
        std::vector<reward::PairVerdict> untagged;
        io::for_each_jsonl(verdicts_jsonl, 0, [&](const json& j, long) {
            auto v = io::verdict_from_json(j);
            if (j.contains("prompt_id")) {
                const auto& p = j["prompt_id"];
                by_prompt[p.is_string() ? p.get<std::string>() : p.dump()].push_back(v);
            } else {
                untagged.push_back(v);
            }
        });
        if (!untagged.empty()) {
            if (groups.size() != 1)
                throw Error(ErrorCode::coverage, "verdicts without prompt_id need exactly one group in the input");
            auto& dst = by_prompt[groups.front().first.prompt_id];
            dst.insert(dst.end(), untagged.begin(), untagged.end());
        }
        for (const auto& [prompt, vs] : by_prompt) {
            const bool known = std::any_of(groups.begin(), groups.end(),
                                           [&](const auto& g) { return g.first.prompt_id == prompt; });
            if (!known) throw Error(ErrorCode::coverage, "verdicts reference unknown prompt '" + prompt + "'");
        }

        std::string out;
        std::size_t responses = 0, masked = 0, bonuses = 0;
        for (const auto& [group, line] : groups) {
            try {
                const auto it = by_prompt.find(group.prompt_id);
                const std::vector<reward::PairVerdict> none;
                const auto scored = reward::score_group(group, it == by_prompt.end() ? none : it->second, cfg);
                for (const auto& s : scored) {
                    json o = {{"prompt_id", group.prompt_id}};
                    o.update(io::to_json(s));
                    out += io::line(o);
                    ++responses;
                    if (s.masked) ++masked;
                    if (s.reward.bonus != 0) ++bonuses;
                }
            } catch (const Error& e) {
                if (e.line() != 0) throw;
                throw Error(e.code(), "line " + std::to_string(line) + " (prompt " + group.prompt_id + "): " + e.what(),
                            line);
            }
        }
        const json report = {
            {"groups", groups.size()}, {"responses", responses}, {"masked", masked}, {"bonus_awarded", bonuses}};
        emit(out_jsonl, out, out_report, report.dump());
    });
}

ptk_status ptk_filter_jsonl(const char* jsonl, const char* rules_text, size_t index_offset, long line_offset,
                            char** out_jsonl, char** out_report) {
    return guard([&] {
        require(jsonl, "jsonl");
        require(out_jsonl, "out_jsonl");
        require(out_report, "out_report");
        const auto rules = rules_text ? filter::parse_rules(rules_text) : filter::FilterRules{};
        const auto corpus = read_conversations(jsonl, line_offset);
        const auto outcome = filter::run_filter(corpus, rules, index_offset);
        std::size_t hallucinations = 0;
        for (const auto& c : corpus) hallucinations += filter::detect_tool_hallucination(c) ? 1 : 0;
        std::string out;
        for (const auto& c : outcome.kept) out += io::line(io::to_json(c));
        json report = io::to_json(outcome.report);
        report["tool_hallucinations"] = hallucinations;
        emit(out_jsonl, out, out_report, report.dump());
    });
}

ptk_status ptk_hallucination_rate_jsonl(const char* jsonl, double* out) {
    return guard([&] {
        require(jsonl, "jsonl");
        require(out, "out");
        *out = filter::hallucination_rate(read_conversations(jsonl, 0));
    });
}

ptk_status ptk_label_dpo_jsonl(const char* rollouts_jsonl, uint64_t seed, size_t pairs_per_prompt, long line_offset,
                               char** out_jsonl, char** out_report) {
    return guard([&] {
        require(rollouts_jsonl, "rollouts_jsonl");
        require(out_jsonl, "out_jsonl");
        require(out_report, "out_report");
        std::vector<filter::Rollout> rollouts;
        io::for_each_jsonl(rollouts_jsonl, line_offset,
                           [&](const json& j, long) { rollouts.push_back(io::rollout_from_json(j)); });
        const auto result = filter::label_dpo_pairs(rollouts, seed, {pairs_per_prompt});
        std::string out;
        json by_category = {{"no_tools", 0}, {"with_tools", 0}, {"hallucination_penalty", 0}};
        for (const auto& p : result.pairs) {
            out += io::line(io::to_json(p));
            auto& n = by_category[filter::to_string(p.category)];
            n = n.get<std::int64_t>() + 1;
        }
        json skipped = json::array();
        for (const auto& s : result.skipped) skipped.push_back({{"prompt_id", s.prompt_id}, {"reason", s.reason}});
        const json report = {{"rollouts", rollouts.size()},
                             {"pairs", result.pairs.size()},
                             {"pairs_by_category", by_category},
                             {"skipped", skipped}};
        emit(out_jsonl, out, out_report, report.dump());
    });
}

ptk_status ptk_prompt_sensitivity_jsonl(const char* jsonl, char** out_report) {
    return guard([&] {
        require(jsonl, "jsonl");
        require(out_report, "out_report");
        std::vector<std::string> variants;
        std::vector<std::vector<double>> rows;
        io::for_each_jsonl(jsonl, 0, [&](const json& j, long) {
            const auto& v = j.at("variant");
            variants.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            const auto& scores = j.at("scores");
            if (!scores.is_array()) throw Error(ErrorCode::parse, "field 'scores' must be an array");
            std::vector<double> row;
            for (const auto& s : scores) {
                if (!s.is_number()) throw Error(ErrorCode::parse, "scores must be numbers");
                row.push_back(s.get<double>());
            }
            rows.push_back(std::move(row));
        });
        const double sensitivity = curriculum::prompt_sensitivity(rows);
        json means = json::object();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double m = 0;
            for (double x : rows[i]) m += x;
            means[variants[i]] = m / static_cast<double>(rows[i].size());
        }
        const json report = {{"variants", rows.size()}, {"per_variant_mean", means}, {"sensitivity", sensitivity}};
        emit(out_report, report.dump());
    });
}

// ---- curriculum

ptk_status ptk_curriculum_create(const char* profiles_jsonl, const char* config_text, const uint64_t* seed,
                                 ptk_curriculum** out) {
    return guard([&] {
        require(profiles_jsonl, "profiles_jsonl");
        require(out, "out");
        const auto kv = kv_of(config_text);
        auto cfg = curriculum::curriculum_config_from(kv);
        if (seed) cfg.seed = *seed;
        std::vector<curriculum::TaskProfile> profiles;
        io::for_each_jsonl(profiles_jsonl, 0, [&](const json& j, long) {
            auto p = io::profile_from_json(j);
            curriculum::validate(p);
            profiles.push_back(std::move(p));
        });
        if (kv.get_bool("filter_solved", true)) profiles = curriculum::filter_solved(profiles);
        std::map<std::string, double> pass_rate;
        for (const auto& p : profiles)
            if (!pass_rate.emplace(p.task_id, p.pass_rate).second)
                throw Error(ErrorCode::invalid_argument, "duplicate task id '" + p.task_id + "'");
        *out = new ptk_curriculum{std::move(profiles), std::move(cfg), std::move(pass_rate)};
    });
}

void ptk_curriculum_destroy(ptk_curriculum* c) { delete c; }

ptk_status ptk_curriculum_target_mean(const ptk_curriculum* c, size_t step, double* out) {
    return guard([&] {
        require(c, "curriculum");
        require(out, "out");
        *out = curriculum::target_mean(c->cfg, step);
    });
}

ptk_status ptk_curriculum_plan_json(const ptk_curriculum* c, size_t step, char** out_json) {
    return guard([&] {
        require(c, "curriculum");
        require(out_json, "out_json");
        const auto plan = curriculum::sample_batch(c->profiles, c->cfg, step);
        double sum = 0;
        for (const auto& id : plan.entries) sum += c->pass_rate.at(id);
        json j = io::to_json(plan);
        j["mean_pass_rate"] = plan.entries.empty() ? 0.0 : sum / static_cast<double>(plan.entries.size());
        emit(out_json, j.dump());
    });
}

// ---- router

void ptk_router_config_default(ptk_router_config* cfg) {
    if (!cfg) return;
    const router::RouterConfig d;
    *cfg = {d.n_experts, d.top_k, d.n_shared, d.bias_update_rate, d.lb_coeff};
}

static router::RouterConfig router_config(const ptk_router_config* c) {
    require(c, "cfg");
    return {c->n_experts, c->top_k, c->n_shared, c->bias_update_rate, c->lb_coeff};
}

ptk_status ptk_router_create(const ptk_router_config* cfg, size_t hidden_dim, uint64_t seed, ptk_router** out) {
    return guard([&] {
        require(out, "out");
        *out = new ptk_router{router::Router(router_config(cfg), hidden_dim, seed)};
    });
}

void ptk_router_destroy(ptk_router* r) { delete r; }

ptk_status ptk_router_logits(const ptk_router* r, const double* hidden, size_t n, double* out) {
    return guard([&] {
        require(r, "router");
        require(out, "out");
        if (n) require(hidden, "hidden");
        const auto l = r->impl.logits({hidden, n});
        std::copy(l.begin(), l.end(), out);
    });
}

ptk_status ptk_router_route(const ptk_router* r, const double* logits, size_t n, size_t* selected, double* gates) {
    return guard([&] {
        require(r, "router");
        require(logits, "logits");
        require(selected, "selected");
        require(gates, "gates");
        const auto d = r->impl.route({logits, n});
        std::copy(d.selected.begin(), d.selected.end(), selected);
        std::copy(d.gates.begin(), d.gates.end(), gates);
    });
}

ptk_status ptk_router_update_bias(ptk_router* r, const double* loads, size_t n) {
    return guard([&] {
        require(r, "router");
        require(loads, "loads");
        r->impl.update_bias({loads, n});
    });
}

ptk_status ptk_router_bias(const ptk_router* r, double* out, size_t n) {
    return guard([&] {
        require(r, "router");
        require(out, "out");
        const auto b = r->impl.bias();
        if (n != b.size()) throw Error(ErrorCode::shape, "bias buffer has the wrong length");
        std::copy(b.begin(), b.end(), out);
    });
}

ptk_status ptk_router_freeze(ptk_router* r) {
    return guard([&] {
        require(r, "router");
        r->impl.freeze();
    });
}

ptk_status ptk_router_update_weights(ptk_router* r, const double* delta, size_t n) {
    return guard([&] {
        require(r, "router");
        if (n) require(delta, "delta");
        r->impl.update_weights({delta, n});
    });
}

ptk_status ptk_lb_loss(const ptk_router_config* cfg, const double* gate_probs, const size_t* selections, size_t tokens,
                       double* out) {
    return guard([&] {
        const auto c = router_config(cfg);
        c.validate();
        require(gate_probs, "gate_probs");
        require(selections, "selections");
        require(out, "out");
        *out = router::lb_loss({gate_probs, tokens * c.n_experts}, {selections, tokens * c.top_k}, tokens, c);
    });
}

void ptk_simulation_options_default(ptk_simulation_options* opts) {
    if (!opts) return;
    const router::SimulationOptions d;
    ptk_router_config_default(&opts->router);
    opts->steps = d.steps;
    opts->tokens_per_step = d.tokens_per_step;
    opts->seed = d.seed;
    opts->skew = d.skew;
    opts->noise = d.noise;
    opts->window = d.window;
    opts->target_ratio = d.target_ratio;
    opts->include_trajectories = 1;
}

ptk_status ptk_simulate_router_json(const ptk_simulation_options* opts, char** out_json) {
    return guard([&] {
        require(opts, "opts");
        require(out_json, "out_json");
        router::SimulationOptions o;
        o.router = router_config(&opts->router);
        o.steps = opts->steps;
        o.tokens_per_step = opts->tokens_per_step;
        o.seed = opts->seed;
        o.skew = opts->skew;
        o.noise = opts->noise;
        o.window = opts->window;
        o.target_ratio = opts->target_ratio;
        o.record_loads = opts->include_trajectories != 0;
        const auto report = router::simulate(o);
        json j = {{"experts", o.router.n_experts},
                  {"top_k", o.router.top_k},
                  {"bias_update_rate", o.router.bias_update_rate},
                  {"seed", o.seed}};
        j.update(io::to_json(report, o.record_loads));
        emit(out_json, j.dump());
    });
}

// ---- quantization

ptk_status ptk_plan_quant_json(const char* pattern_text, const char* policy, const char* dims_text, char** out_json) {
    return guard([&] {
        require(pattern_text, "pattern_text");
        require(out_json, "out_json");
        const auto pattern = quant::LayerPattern::parse(pattern_text);
        const auto pol = quant::QuantPolicy::parse(policy ? policy : "selective");
        const auto dims = dims_text ? quant::ModelDims::from_config(KvConfig::parse(dims_text))
                                    : quant::ModelDims::nano_defaults();
        const auto plan = quant::plan(pattern, pol);
        const auto mem = quant::memory_estimate(pattern, plan, dims);
        json j = {{"policy", policy ? policy : "selective"},
                  {"layers", pattern.layers.size()},
                  {"attention_layers", pattern.count(quant::LayerKind::attention)},
                  {"mamba_layers", pattern.count(quant::LayerKind::mamba)},
                  {"moe_layers", pattern.count(quant::LayerKind::moe)}};
        j.update(io::to_json(plan));
        j["memory"] = io::to_json(mem);
        emit(out_json, j.dump());
    });
}

}  // extern "C"
