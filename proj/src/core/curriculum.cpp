// SPDX-License-Identifier: Apache-2.0
#include "ptkit/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptkit/error.hpp"
#include "ptkit/rng.hpp"

namespace ptkit::curriculum {

void CurriculumConfig::validate() const {
    if (domain_ratios.empty()) throw Error(ErrorCode::config, "curriculum needs at least one domain ratio");
    double sum = 0;
    for (const auto& [domain, ratio] : domain_ratios) {
        if (!(ratio >= 0)) throw Error(ErrorCode::config, "ratio for domain '" + domain + "' is negative");
        sum += ratio;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::config, "domain ratios sum to " + std::to_string(sum) + ", not 1");
    if (!(0 <= mu_end && mu_end <= mu_start && mu_start <= 1))
        throw Error(ErrorCode::config, "need 0 <= mu_end <= mu_start <= 1");
    if (!(sigma > 0)) throw Error(ErrorCode::config, "sigma must be positive");
    if (total_steps == 0) throw Error(ErrorCode::config, "total_steps must be positive");
    if (batch_size == 0) throw Error(ErrorCode::config, "batch_size must be positive");
}

void validate(const TaskProfile& profile) {
    if (!(profile.pass_rate >= 0 && profile.pass_rate <= 1))
        throw Error(ErrorCode::invalid_argument, "task '" + profile.task_id + "': pass_rate outside [0, 1]");
}

std::vector<TaskProfile> filter_solved(std::span<const TaskProfile> profiles) {
    std::vector<TaskProfile> out;
    std::copy_if(profiles.begin(), profiles.end(), std::back_inserter(out),
                 [](const TaskProfile& p) { return p.pass_rate < 1.0; });
    return out;
}

double target_mean(const CurriculumConfig& cfg, std::size_t step) {
    if (step >= cfg.total_steps) return cfg.mu_end;
    const double t = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
    return cfg.mu_start + t * (cfg.mu_end - cfg.mu_start);
}

double log_weight(double pass_rate, double mu, double sigma) {
    const double z = (pass_rate - mu) / sigma;
    return -0.5 * z * z;
}

std::map<std::string, std::size_t> domain_quotas(const CurriculumConfig& cfg) {
    std::map<std::string, std::size_t> quotas;
    std::vector<std::pair<double, std::string>> remainders;
    std::size_t assigned = 0;
    for (const auto& [domain, ratio] : cfg.domain_ratios) {
        const double exact = ratio * static_cast<double>(cfg.batch_size);
        const auto floor = static_cast<std::size_t>(std::floor(exact));
        quotas[domain] = floor;
        assigned += floor;
        remainders.emplace_back(exact - static_cast<double>(floor), domain);
    }
    // Larger remainder first; ties go to the alphabetically earlier domain.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < cfg.batch_size && i < remainders.size(); ++i, ++assigned)
        ++quotas[remainders[i].second];
    return quotas;
}

BatchPlan sample_batch(std::span<const TaskProfile> profiles, const CurriculumConfig& cfg, std::size_t step) {
    cfg.validate();
    std::map<std::string, std::vector<std::size_t>> pools;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        validate(profiles[i]);
        pools[profiles[i].domain].push_back(i);
    }

    BatchPlan plan;
    plan.step = step;
    plan.target_mean = target_mean(cfg, step);
    Rng rng(mix_seed({cfg.seed, step}));

    for (const auto& [domain, quota] : domain_quotas(cfg)) {
        const auto pool_it = pools.find(domain);
        if (pool_it == pools.end() || pool_it->second.empty()) {
            if (cfg.domain_ratios.at(domain) == 0.0) continue;
            throw Error(ErrorCode::invalid_argument, "domain '" + domain + "' has no eligible tasks");
        }
        plan.domain_counts[domain] = quota;
        if (quota == 0) continue;
        const auto& pool = pool_it->second;

        std::vector<double> logw(pool.size());
        for (std::size_t j = 0; j < pool.size(); ++j)
            logw[j] = log_weight(profiles[pool[j]].pass_rate, plan.target_mean, cfg.sigma);

        if (quota <= pool.size()) {
            // Gumbel top-k == sequential weighted draws without replacement.
            std::vector<std::pair<double, std::size_t>> keys(pool.size());
            for (std::size_t j = 0; j < pool.size(); ++j) keys[j] = {logw[j] + rng.gumbel(), j};
            std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(quota), keys.end(),
                              [](const auto& a, const auto& b) { return a.first > b.first; });
            for (std::size_t q = 0; q < quota; ++q) plan.entries.push_back(profiles[pool[keys[q].second]].task_id);
        } else {
            plan.replacement_domains.push_back(domain);
            const double peak = *std::max_element(logw.begin(), logw.end());
            std::vector<double> cumulative(pool.size());
            double total = 0;
            for (std::size_t j = 0; j < pool.size(); ++j) cumulative[j] = total += std::exp(logw[j] - peak);
            for (std::size_t q = 0; q < quota; ++q) {
                const double u = rng.uniform() * total;
                auto j = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                  cumulative.begin());
                plan.entries.push_back(profiles[pool[std::min(j, pool.size() - 1)]].task_id);
            }
        }
    }

    for (std::size_t i = plan.entries.size(); i > 1; --i) std::swap(plan.entries[i - 1], plan.entries[rng.below(i)]);
    return plan;
}

void WsdConfig::validate() const {
    if (!(warmup_tokens >= 0 && warmup_tokens < stable_end() && stable_end() < total_tokens))
        throw Error(ErrorCode::config, "need 0 <= warmup_tokens < stable_fraction * total_tokens < total_tokens");
    if (!(lr_min > 0 && lr_min < lr_max)) throw Error(ErrorCode::config, "need 0 < lr_min < lr_max");
}

double wsd_lr(double tokens_seen, const WsdConfig& cfg) {
    cfg.validate();
    if (!(tokens_seen >= 0 && tokens_seen <= cfg.total_tokens))
        throw Error(ErrorCode::domain, "tokens_seen " + std::to_string(tokens_seen) + " outside [0, total_tokens]");
    if (tokens_seen < cfg.warmup_tokens) return cfg.lr_max * (tokens_seen / cfg.warmup_tokens);
    const double stable_end = cfg.stable_end();
    if (tokens_seen <= stable_end) return cfg.lr_max;
    if (tokens_seen == cfg.total_tokens) return cfg.lr_min;
    const double frac = (tokens_seen - stable_end) / (cfg.total_tokens - stable_end);
    return cfg.lr_max * std::pow(cfg.lr_min / cfg.lr_max, frac);
}

double prompt_sensitivity(std::span<const std::vector<double>> accuracy) {
    if (accuracy.size() < 2) throw Error(ErrorCode::invalid_argument, "prompt sensitivity needs at least 2 prompts");
    std::vector<double> means;
    means.reserve(accuracy.size());
    for (const auto& row : accuracy) {
        if (row.empty()) throw Error(ErrorCode::invalid_argument, "every prompt needs at least one seed");
        means.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
    double var = 0;
    for (double m : means) var += (m - mean) * (m - mean);
    return std::sqrt(var / static_cast<double>(means.size()));
}

CurriculumConfig curriculum_config_from(const KvConfig& kv) {
    kv.require_known({"mu_start", "mu_end", "sigma", "total_steps", "batch_size", "seed", "filter_solved"}, {"ratio."});
    CurriculumConfig cfg;
    cfg.mu_start = kv.get_double("mu_start", cfg.mu_start);
    cfg.mu_end = kv.get_double("mu_end", cfg.mu_end);
    cfg.sigma = kv.get_double("sigma", cfg.sigma);
    cfg.total_steps = kv.get_size("total_steps", cfg.total_steps);
    cfg.batch_size = kv.get_size("batch_size", cfg.batch_size);
    cfg.seed = kv.get_u64("seed", cfg.seed);
    for (const auto& [domain, ratio] : kv.with_prefix("ratio.")) cfg.domain_ratios[domain] = parse_double(ratio, domain);
    cfg.validate();
    return cfg;
}

WsdConfig wsd_config_from(const KvConfig& kv) {
    kv.require_known({"warmup_tokens", "total_tokens", "stable_fraction", "lr_max", "lr_min"});
    WsdConfig cfg;
    cfg.warmup_tokens = kv.get_double("warmup_tokens", cfg.warmup_tokens);
    cfg.total_tokens = kv.get_double("total_tokens", cfg.total_tokens);
    cfg.stable_fraction = kv.get_double("stable_fraction", cfg.stable_fraction);
    cfg.lr_max = kv.get_double("lr_max", cfg.lr_max);
    cfg.lr_min = kv.get_double("lr_min", cfg.lr_min);
    cfg.validate();
    return cfg;
}

}  // namespace ptkit::curriculum
