// SPDX-License-Identifier: Apache-2.0
#include "ptkit/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "ptkit/error.hpp"

namespace ptkit::reward {

namespace {

void check_range(double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi))
        throw Error(ErrorCode::invalid_argument,
                    std::string(name) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
}

double mean_of(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

void validate(const JudgePrediction& pred) {
    check_range(pred.p_h1, 1, 5, "p_h1");
    check_range(pred.p_h2, 1, 5, "p_h2");
    check_range(pred.p_r, 1, 6, "p_r");
}

void validate(const JudgeGroundTruth& truth) {
    check_range(truth.g_h1, 1, 5, "g_h1");
    check_range(truth.g_h2, 1, 5, "g_h2");
    check_range(truth.g_r, 1, 6, "g_r");
}

double genrm_reward(const JudgePrediction& pred, const JudgeGroundTruth& truth, const GenRmRewardConfig& cfg) {
    validate(pred);
    validate(truth);
    if (!(cfg.c1 >= 0 && cfg.c2 >= 0)) throw Error(ErrorCode::invalid_argument, "c1 and c2 must be non-negative");
    const double format_term = pred.format_violation ? cfg.c1 : 0.0;
    return -format_term - std::abs(pred.p_h1 - truth.g_h1) - std::abs(pred.p_h2 - truth.g_h2) -
           cfg.c2 * std::abs(pred.p_r - truth.g_r);
}

JudgeGroundTruth position_swap(const JudgeGroundTruth& truth) { return {truth.g_h2, truth.g_h1, 7.0 - truth.g_r}; }

JudgePrediction position_swap(const JudgePrediction& pred) {
    return {pred.p_h2, pred.p_h1, 7.0 - pred.p_r, pred.format_violation};
}

JudgeSample position_swap(const JudgeSample& sample) {
    return {sample.response_2, sample.response_1, position_swap(sample.truth)};
}

void validate(const ResponseGroup& group) {
    std::set<std::int64_t> ids;
    for (const auto& r : group.responses) {
        if (r.think_len < 0 || r.answer_len < 0 || r.total_len < 0)
            throw Error(ErrorCode::invalid_argument, "response " + std::to_string(r.id) + ": negative length");
        if (r.think_len + r.answer_len > r.total_len)
            throw Error(ErrorCode::invalid_argument,
                        "response " + std::to_string(r.id) + ": think_len + answer_len exceeds total_len");
        if (!ids.insert(r.id).second)
            throw Error(ErrorCode::invalid_argument, "duplicate response id " + std::to_string(r.id));
    }
}

std::vector<ComparisonPair> circular_schedule(std::size_t n) {
    if (n < 2) throw Error(ErrorCode::invalid_argument, "circular schedule needs a group of at least 2, got " + std::to_string(n));
    std::vector<ComparisonPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pairs.push_back({i, (i + 1) % n});
    return pairs;
}

PairVerdict tiebreak(const PairVerdict& verdict) {
    if (verdict.s_i != verdict.s_j) return verdict;
    PairVerdict out = verdict;
    out.s_i = verdict.s_i + (3.5 - verdict.s_r);
    out.s_j = verdict.s_j + (verdict.s_r - 3.5);
    return out;
}

std::vector<double> base_rewards(const ResponseGroup& group, std::span<const PairVerdict> verdicts) {
    const std::size_t n = group.responses.size();
    std::unordered_map<std::int64_t, std::size_t> position;
    for (std::size_t i = 0; i < n; ++i) position.emplace(group.responses[i].id, i);
    if (position.size() != n) throw Error(ErrorCode::invalid_argument, "duplicate response id in group");

    std::map<std::pair<std::size_t, std::size_t>, const PairVerdict*> seen;
    for (const auto& v : verdicts) {
        auto a = position.find(v.first);
        auto b = position.find(v.second);
        if (a == position.end() || b == position.end())
            throw Error(ErrorCode::coverage, "verdict (" + std::to_string(v.first) + ", " + std::to_string(v.second) +
                                                 ") references an unknown response in group '" + group.prompt_id + "'");
        if (!seen.emplace(std::pair{a->second, b->second}, &v).second)
            throw Error(ErrorCode::coverage, "duplicate verdict (" + std::to_string(v.first) + ", " +
                                                 std::to_string(v.second) + ") in group '" + group.prompt_id + "'");
    }
    const auto schedule = circular_schedule(n);
    if (seen.size() != schedule.size())
        throw Error(ErrorCode::coverage, "group '" + group.prompt_id + "' has " + std::to_string(seen.size()) +
                                             " verdicts, the circular schedule needs " + std::to_string(n));

    std::vector<double> as_first(n), as_second(n);
    for (const auto& [a, b] : schedule) {
        auto it = seen.find({a, b});
        if (it == seen.end())
            throw Error(ErrorCode::coverage, "group '" + group.prompt_id + "' is missing verdict (" +
                                                 std::to_string(group.responses[a].id) + ", " +
                                                 std::to_string(group.responses[b].id) + ")");
        as_first[a] = it->second->s_i;
        as_second[b] = it->second->s_j;
    }
    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) base[i] = (as_first[i] + as_second[i]) / 2.0;
    return base;
}

std::vector<double> length_weights(std::span<const std::int64_t> lengths) {
    if (lengths.size() < 2) throw Error(ErrorCode::invalid_argument, "length normalization needs at least 2 responses");
    const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
    std::vector<double> w(lengths.size(), 0.0);
    if (*lo == *hi) return w;
    const double range = static_cast<double>(*hi - *lo);
    for (std::size_t i = 0; i < lengths.size(); ++i) w[i] = 1.0 - static_cast<double>(lengths[i] - *lo) / range;
    const double mean = mean_of(w);
    for (auto& x : w) x -= mean;
    return w;
}

double nearest_rank_percentile(std::span<const double> values, double percentile) {
    if (values.empty()) throw Error(ErrorCode::invalid_argument, "percentile of an empty set");
    if (!(percentile >= 0 && percentile <= 100)) throw Error(ErrorCode::invalid_argument, "percentile outside [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::size_t argmin_length(std::span<const std::int64_t> lengths) {
    return static_cast<std::size_t>(std::min_element(lengths.begin(), lengths.end()) - lengths.begin());
}

std::vector<RewardBreakdown> final_rewards(const ResponseGroup& group, std::span<const double> base,
                                           const LengthControlConfig& cfg) {
    const std::size_t n = group.responses.size();
    if (base.size() != n) throw Error(ErrorCode::shape, "base reward count does not match group size");
    if (cfg.lambda_think < 0 || cfg.lambda_answer < 0 || cfg.beta_think < 0 || cfg.beta_answer < 0)
        throw Error(ErrorCode::invalid_argument, "length-control weights must be non-negative");
    if (!(cfg.tau_percentile >= 0 && cfg.tau_percentile <= 100))
        throw Error(ErrorCode::invalid_argument, "tau_percentile outside [0, 100]");

    std::vector<std::int64_t> think(n), answer(n);
    for (std::size_t i = 0; i < n; ++i) {
        think[i] = group.responses[i].think_len;
        answer[i] = group.responses[i].answer_len;
    }
    const auto w_think = length_weights(think);
    const auto w_answer = length_weights(answer);
    const double threshold = nearest_rank_percentile(base, cfg.tau_percentile);
    const std::size_t k = argmin_length(think);
    const std::size_t m = argmin_length(answer);

    std::vector<RewardBreakdown> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        RewardBreakdown& r = out[i];
        r.base = base[i];
        r.length_adj_think = cfg.lambda_think * w_think[i];
        r.length_adj_answer = cfg.lambda_answer * w_answer[i];
        if (i == k && base[i] >= threshold) r.bonus += cfg.beta_think;
        if (i == m && base[i] >= threshold) r.bonus += cfg.beta_answer;
        r.final = r.base + r.length_adj_think + r.length_adj_answer + r.bonus;
    }
    return out;
}

std::vector<double> grpo_advantages(std::span<const double> rewards, double eps) {
    if (rewards.size() < 2) throw Error(ErrorCode::invalid_argument, "advantages need at least 2 rewards");
    const double mean = mean_of(rewards);
    double var = 0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / static_cast<double>(rewards.size()));
    std::vector<double> adv(rewards.size(), 0.0);
    if (sd == 0.0) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sd + eps);
    return adv;
}

std::vector<bool> overlong_mask(std::span<const std::int64_t> lengths, std::int64_t max_len) {
    if (max_len <= 0) throw Error(ErrorCode::invalid_argument, "max_len must be positive");
    std::vector<bool> mask(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) mask[i] = lengths[i] >= max_len;
    return mask;
}

std::vector<ScoredResponse> score_group(const ResponseGroup& group, std::span<const PairVerdict> raw_verdicts,
                                        const ScoringConfig& cfg) {
    validate(group);
    const std::size_t n = group.responses.size();
    std::vector<PairVerdict> verdicts;
    verdicts.reserve(raw_verdicts.size());
    for (const auto& v : raw_verdicts) {
        if (v.first == v.second)
            throw Error(ErrorCode::invalid_argument, "verdict compares response " + std::to_string(v.first) + " with itself");
        check_range(v.s_i, 1, 5, "s_i");
        check_range(v.s_j, 1, 5, "s_j");
        check_range(v.s_r, 1, 6, "s_r");
        verdicts.push_back(tiebreak(v));
    }
    const auto base = base_rewards(group, verdicts);

    std::vector<bool> masked(n, false);
    if (cfg.max_len) {
        std::vector<std::int64_t> totals(n);
        for (std::size_t i = 0; i < n; ++i) totals[i] = group.responses[i].total_len;
        masked = overlong_mask(totals, *cfg.max_len);
    }

    std::vector<std::size_t> stats_members;
    for (std::size_t i = 0; i < n; ++i)
        if (!masked[i] || cfg.overlong_in_length_stats) stats_members.push_back(i);

    std::vector<ScoredResponse> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].id = group.responses[i].id;
        out[i].masked = masked[i];
        out[i].reward.base = base[i];
        out[i].reward.final = base[i];
    }
    if (stats_members.size() >= 2) {
        ResponseGroup sub{group.prompt_id, {}};
        std::vector<double> sub_base;
        for (auto i : stats_members) {
            sub.responses.push_back(group.responses[i]);
            sub_base.push_back(base[i]);
        }
        const auto rewards = final_rewards(sub, sub_base, cfg.length);
        for (std::size_t j = 0; j < stats_members.size(); ++j) out[stats_members[j]].reward = rewards[j];
    }

    std::vector<std::size_t> trained;
    for (std::size_t i = 0; i < n; ++i)
        if (!masked[i]) trained.push_back(i);
    if (trained.size() >= 2) {
        std::vector<double> finals;
        for (auto i : trained) finals.push_back(out[i].reward.final);
        const auto adv = grpo_advantages(finals, cfg.advantage_eps);
        for (std::size_t j = 0; j < trained.size(); ++j) out[trained[j]].advantage = adv[j];
    }
    return out;
}

ScoringConfig scoring_config_from(const KvConfig& kv) {
    kv.require_known({"c1", "c2", "lambda_think", "lambda_answer", "beta_think", "beta_answer", "tau_percentile",
                      "max_len", "overlong_in_length_stats", "advantage_eps"});
    ScoringConfig cfg;
    cfg.genrm.c1 = kv.get_double("c1", cfg.genrm.c1);
    cfg.genrm.c2 = kv.get_double("c2", cfg.genrm.c2);
    auto& l = cfg.length;
    l.lambda_think = kv.get_double("lambda_think", l.lambda_think);
    l.lambda_answer = kv.get_double("lambda_answer", l.lambda_answer);
    l.beta_think = kv.get_double("beta_think", l.beta_think);
    l.beta_answer = kv.get_double("beta_answer", l.beta_answer);
    l.tau_percentile = kv.get_double("tau_percentile", l.tau_percentile);
    if (kv.has("max_len")) cfg.max_len = kv.get_int("max_len", 0);
    cfg.overlong_in_length_stats = kv.get_bool("overlong_in_length_stats", false);
    cfg.advantage_eps = kv.get_double("advantage_eps", cfg.advantage_eps);
    if (cfg.genrm.c1 < 0 || cfg.genrm.c2 < 0) throw Error(ErrorCode::config, "c1 and c2 must be non-negative");
    if (l.lambda_think < 0 || l.lambda_answer < 0 || l.beta_think < 0 || l.beta_answer < 0)
        throw Error(ErrorCode::config, "length-control weights must be non-negative");
    if (!(l.tau_percentile > 0 && l.tau_percentile <= 100))
        throw Error(ErrorCode::config, "tau_percentile must be in (0, 100]");
    if (cfg.max_len && *cfg.max_len <= 0) throw Error(ErrorCode::config, "max_len must be positive");
    if (!(cfg.advantage_eps >= 0)) throw Error(ErrorCode::config, "advantage_eps must be non-negative");
    return cfg;
}

}  // namespace ptkit::reward
