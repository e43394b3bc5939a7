// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ptkit/config.hpp"

namespace ptkit::curriculum {

struct TaskProfile {
    std::string task_id;
    std::string domain;
    double pass_rate = 0;  // [0, 1], measured with the reference checkpoint
};

struct CurriculumConfig {
    std::map<std::string, double> domain_ratios;
    double mu_start = 0.9;
    double mu_end = 0.2;
    double sigma = 0.2;
    std::size_t total_steps = 100;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BatchPlan {
    std::size_t step = 0;
    double target_mean = 0;
    std::vector<std::string> entries;  // task ids, shuffled
    std::map<std::string, std::size_t> domain_counts;
    // Domains whose quota exceeded their pool and were drawn with replacement.
    std::vector<std::string> replacement_domains;

    bool with_replacement() const { return !replacement_domains.empty(); }
};

/// Keys: mu_start, mu_end, sigma, total_steps, batch_size, seed and one
/// `ratio.<domain>` per domain.
CurriculumConfig curriculum_config_from(const KvConfig& cfg);

void validate(const TaskProfile& profile);

/// Drops tasks the reference checkpoint already solves every time.
std::vector<TaskProfile> filter_solved(std::span<const TaskProfile> profiles);

/// Linear ramp from mu_start at step 0 to mu_end at total_steps, held after.
double target_mean(const CurriculumConfig& cfg, std::size_t step);

/// Unnormalized Gaussian log-density used as a sampling log-weight.
double log_weight(double pass_rate, double mu, double sigma);

/// Largest-remainder apportionment of batch_size over domain_ratios; each
/// quota is within 1 of ratio * batch_size and the quotas sum exactly.
std::map<std::string, std::size_t> domain_quotas(const CurriculumConfig& cfg);

/// Draws one batch. Within each domain tasks are drawn without replacement
/// with probability proportional to the Gaussian density at their pass rate
/// (Gumbel top-k). The generator is seeded from (cfg.seed, step) only.
BatchPlan sample_batch(std::span<const TaskProfile> profiles, const CurriculumConfig& cfg, std::size_t step);

// -- learning-rate schedule ---------------------------------------------------

struct WsdConfig {
    double warmup_tokens = 8.4e9;
    double total_tokens = 25e12;
    double stable_fraction = 0.8;  // stable phase ends at stable_fraction * total_tokens
    double lr_max = 1e-3;
    double lr_min = 1e-5;

    double stable_end() const { return stable_fraction * total_tokens; }
    void validate() const;
};

/// Keys: warmup_tokens, total_tokens, stable_fraction, lr_max, lr_min.
WsdConfig wsd_config_from(const KvConfig& cfg);

/// Linear warmup, constant plateau, then log-linear decay to lr_min.
double wsd_lr(double tokens_seen, const WsdConfig& cfg);

// -- evaluation robustness ------------------------------------------------------

/// Population standard deviation over prompts of the per-prompt mean accuracy
/// (rows = prompt variants, columns = seeds).
double prompt_sensitivity(std::span<const std::vector<double>> accuracy);

}  // namespace ptkit::curriculum
