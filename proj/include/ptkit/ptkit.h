/* SPDX-License-Identifier: Apache-2.0 */
#ifndef PTKIT_PTKIT_H
#define PTKIT_PTKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(PTK_BUILDING)
#define PTK_API __attribute__((visibility("default")))
#else
#define PTK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ptk_status {
    PTK_OK = 0,
    PTK_E_INVALID_ARGUMENT = 1,
    PTK_E_PARSE = 2,
    PTK_E_STRUCTURE = 3,
    PTK_E_COVERAGE = 4,
    PTK_E_DOMAIN = 5,
    PTK_E_SHAPE = 6,
    PTK_E_FROZEN = 7,
    PTK_E_CONFIG = 8,
    PTK_E_INTERNAL = 9
} ptk_status;

PTK_API const char* ptk_version(void);
PTK_API const char* ptk_status_name(ptk_status status);

/* Message and 1-based input line of the last failure on this thread. */
PTK_API const char* ptk_last_error_message(void);
PTK_API long ptk_last_error_line(void);

/* Every char** output is heap allocated and owned by the caller. */
PTK_API void ptk_free(char* p);

/* ---- judge reward ---- */

typedef struct ptk_judge_prediction {
    double p_h1, p_h2, p_r;
    int format_violation;
} ptk_judge_prediction;

typedef struct ptk_judge_truth {
    double g_h1, g_h2, g_r;
} ptk_judge_truth;

typedef struct ptk_genrm_config {
    double c1, c2;
} ptk_genrm_config;

PTK_API void ptk_genrm_config_default(ptk_genrm_config* cfg);
/* Reads c1 / c2 from key = value text; absent keys keep their defaults. */
PTK_API ptk_status ptk_genrm_config_parse(const char* text, ptk_genrm_config* cfg);
PTK_API ptk_status ptk_genrm_reward(const ptk_judge_prediction* pred, const ptk_judge_truth* truth,
                                    const ptk_genrm_config* cfg, double* out);
PTK_API ptk_status ptk_swap_truth(const ptk_judge_truth* in, ptk_judge_truth* out);

/* ---- group scoring primitives ---- */

typedef struct ptk_verdict {
    int64_t first, second;
    double s_i, s_j, s_r;
} ptk_verdict;

/* firsts and seconds hold n entries each. */
PTK_API ptk_status ptk_circular_schedule(size_t n, size_t* firsts, size_t* seconds);
PTK_API ptk_status ptk_tiebreak(const ptk_verdict* in, ptk_verdict* out);
PTK_API ptk_status ptk_length_weights(const int64_t* lengths, size_t n, double* out);
PTK_API ptk_status ptk_grpo_advantages(const double* rewards, size_t n, double eps, double* out);
PTK_API ptk_status ptk_overlong_mask(const int64_t* lengths, size_t n, int64_t max_len, int* out);

/* ---- learning-rate schedule ---- */

typedef struct ptk_wsd_config {
    double warmup_tokens, total_tokens, stable_fraction, lr_max, lr_min;
} ptk_wsd_config;

PTK_API void ptk_wsd_config_default(ptk_wsd_config* cfg);
PTK_API ptk_status ptk_wsd_config_parse(const char* text, ptk_wsd_config* cfg);
PTK_API ptk_status ptk_wsd_lr(const ptk_wsd_config* cfg, double tokens_seen, double* out);

/* ---- JSONL pipelines ----
 * line_offset is added to reported line numbers; index_offset is the global
 * position of the first record so shards reproduce unsharded decisions. */

/* Reports produced by the sharded pipelines hold only counts, id lists and
 * flags. Merging two shard reports sums integers, concatenates arrays (a
 * first), ANDs booleans and recurses into objects. */
PTK_API ptk_status ptk_report_merge(const char* a, const char* b, char** out_report);

/* mode: "on", "off" or NULL for each conversation's own mode. */
PTK_API ptk_status ptk_render_jsonl(const char* jsonl, const char* mode, long line_offset, char** out_jsonl);

typedef struct ptk_sft_options {
    double strip_fraction;
    double trunc_fraction;
    uint64_t seed;
    const size_t* budgets; /* NULL selects the default budget set */
    size_t n_budgets;
    size_t index_offset;
    long line_offset;
} ptk_sft_options;

PTK_API void ptk_sft_options_default(ptk_sft_options* opts);
PTK_API ptk_status ptk_sft_prep_jsonl(const char* jsonl, const ptk_sft_options* opts, char** out_jsonl,
                                      char** out_report);

/* Verdict lines may carry "prompt_id"; without it every verdict belongs to
 * the single group in the input. config_text may be NULL. */
PTK_API ptk_status ptk_score_groups_jsonl(const char* groups_jsonl, const char* verdicts_jsonl, const char* config_text,
                                          long group_line_offset, char** out_jsonl, char** out_report);

/* rules_text may be NULL for the defaults. */
PTK_API ptk_status ptk_filter_jsonl(const char* jsonl, const char* rules_text, size_t index_offset, long line_offset,
                                    char** out_jsonl, char** out_report);
PTK_API ptk_status ptk_hallucination_rate_jsonl(const char* jsonl, double* out);

PTK_API ptk_status ptk_label_dpo_jsonl(const char* rollouts_jsonl, uint64_t seed, size_t pairs_per_prompt,
                                       long line_offset, char** out_jsonl, char** out_report);

/* Lines {"variant": ..., "scores": [per-seed accuracy]}. */
PTK_API ptk_status ptk_prompt_sensitivity_jsonl(const char* jsonl, char** out_report);

/* ---- curriculum ---- */

typedef struct ptk_curriculum ptk_curriculum;

/* seed: NULL keeps the config's seed. */
PTK_API ptk_status ptk_curriculum_create(const char* profiles_jsonl, const char* config_text, const uint64_t* seed,
                                         ptk_curriculum** out);
PTK_API void ptk_curriculum_destroy(ptk_curriculum* c);
PTK_API ptk_status ptk_curriculum_target_mean(const ptk_curriculum* c, size_t step, double* out);
/* One JSON object (no newline) describing the batch for `step`. */
PTK_API ptk_status ptk_curriculum_plan_json(const ptk_curriculum* c, size_t step, char** out_json);

/* ---- router ---- */

typedef struct ptk_router_config {
    size_t n_experts, top_k, n_shared;
    double bias_update_rate, lb_coeff;
} ptk_router_config;

typedef struct ptk_router ptk_router;

PTK_API void ptk_router_config_default(ptk_router_config* cfg);
PTK_API ptk_status ptk_router_create(const ptk_router_config* cfg, size_t hidden_dim, uint64_t seed,
                                     ptk_router** out);
PTK_API void ptk_router_destroy(ptk_router* r);
PTK_API ptk_status ptk_router_logits(const ptk_router* r, const double* hidden, size_t n, double* out);
/* selected and gates hold top_k entries. */
PTK_API ptk_status ptk_router_route(const ptk_router* r, const double* logits, size_t n, size_t* selected,
                                    double* gates);
PTK_API ptk_status ptk_router_update_bias(ptk_router* r, const double* loads, size_t n);
PTK_API ptk_status ptk_router_bias(const ptk_router* r, double* out, size_t n);
PTK_API ptk_status ptk_router_freeze(ptk_router* r);
/* PTK_E_FROZEN once frozen. */
PTK_API ptk_status ptk_router_update_weights(ptk_router* r, const double* delta, size_t n);

/* gate_probs: tokens x n_experts, selections: tokens x top_k, row-major. */
PTK_API ptk_status ptk_lb_loss(const ptk_router_config* cfg, const double* gate_probs, const size_t* selections,
                               size_t tokens, double* out);

typedef struct ptk_simulation_options {
    ptk_router_config router;
    size_t steps;
    size_t tokens_per_step;
    uint64_t seed;
    double skew;
    double noise;
    size_t window;
    double target_ratio;
    int include_trajectories;
} ptk_simulation_options;

PTK_API void ptk_simulation_options_default(ptk_simulation_options* opts);
PTK_API ptk_status ptk_simulate_router_json(const ptk_simulation_options* opts, char** out_json);

/* ---- quantization ---- */

/* policy: "selective", "all_fp8", "all_bf16" or "attention=..,mamba=..,kv=..".
 * dims_text: NULL for the built-in dimensions. */
PTK_API ptk_status ptk_plan_quant_json(const char* pattern_text, const char* policy, const char* dims_text,
                                       char** out_json);

#ifdef __cplusplus
}
#endif

#endif
