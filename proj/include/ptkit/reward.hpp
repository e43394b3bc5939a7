// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptkit/config.hpp"

namespace ptkit::reward {

// -- pairwise judge training reward ------------------------------------------

struct JudgePrediction {
    double p_h1 = 1;  // helpfulness of response 1, [1, 5]
    double p_h2 = 1;  // helpfulness of response 2, [1, 5]
    double p_r = 1;   // ranking, [1, 6]; 1 = response 1 far superior
    bool format_violation = false;
};

struct JudgeGroundTruth {
    double g_h1 = 1;
    double g_h2 = 1;
    double g_r = 1;
};

struct GenRmRewardConfig {
    double c1 = 10.0;  // format-violation weight
    double c2 = 1.0;   // ranking weight
};

void validate(const JudgePrediction& pred);
void validate(const JudgeGroundTruth& truth);

/// -c1*[violation] - |p_h1-g_h1| - |p_h2-g_h2| - c2*|p_r-g_r|. Never positive.
double genrm_reward(const JudgePrediction& pred, const JudgeGroundTruth& truth,
                    const GenRmRewardConfig& cfg = {});

/// A judge training sample: two candidate responses and their labels.
struct JudgeSample {
    std::string response_1;
    std::string response_2;
    JudgeGroundTruth truth;
};

// Position augmentation: responses exchange places, helpfulness labels follow
// them and the ranking reflects about 3.5 (r -> 7 - r). Involutions.
JudgeSample position_swap(const JudgeSample& sample);
JudgeGroundTruth position_swap(const JudgeGroundTruth& truth);
JudgePrediction position_swap(const JudgePrediction& pred);

// -- group scoring -------------------------------------------------------------

struct Response {
    std::int64_t id = 0;
    std::int64_t think_len = 0;
    std::int64_t answer_len = 0;
    std::int64_t total_len = 0;
};

struct ResponseGroup {
    std::string prompt_id;
    std::vector<Response> responses;
};

void validate(const ResponseGroup& group);

struct PairVerdict {
    std::int64_t first = 0;  // response ids
    std::int64_t second = 0;
    double s_i = 0;
    double s_j = 0;
    double s_r = 0;
};

struct ComparisonPair {
    std::size_t first;
    std::size_t second;
    bool operator==(const ComparisonPair&) const = default;
};

/// (0,1), (1,2), ..., (n-1,0): n comparisons, every position judged once in
/// each slot. Throws for n < 2.
std::vector<ComparisonPair> circular_schedule(std::size_t n);

/// When s_i == s_j, shifts the pair apart by the ranking's distance from 3.5.
/// The pair sum is conserved; results may leave [1, 5].
PairVerdict tiebreak(const PairVerdict& verdict);

/// Mean of the two (already tiebroken) helpfulness scores each response
/// received. `verdicts` must cover exactly the circular schedule of the group,
/// in any order. Output follows group order.
std::vector<double> base_rewards(const ResponseGroup& group, std::span<const PairVerdict> verdicts);

/// Min-max normalized weights (shortest = 1, longest = 0), centered to sum to
/// zero. A group with no length spread gets all-zero weights.
std::vector<double> length_weights(std::span<const std::int64_t> lengths);

struct LengthControlConfig {
    double lambda_think = 0.5;
    double lambda_answer = 0.5;
    double beta_think = 0.5;
    double beta_answer = 0.5;
    double tau_percentile = 80.0;
};

struct RewardBreakdown {
    double base = 0;
    double length_adj_think = 0;
    double length_adj_answer = 0;
    double bonus = 0;
    double final = 0;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (rank >= 1).
double nearest_rank_percentile(std::span<const double> values, double percentile);

/// Index of the first minimum.
std::size_t argmin_length(std::span<const std::int64_t> lengths);

std::vector<RewardBreakdown> final_rewards(const ResponseGroup& group, std::span<const double> base,
                                           const LengthControlConfig& cfg);

/// (r - mean) / (population std + eps); all zeros when the std is zero.
std::vector<double> grpo_advantages(std::span<const double> rewards, double eps = 1e-8);

/// true = excluded from the loss (length >= max_len).
std::vector<bool> overlong_mask(std::span<const std::int64_t> lengths, std::int64_t max_len);

// -- end-to-end group scoring ---------------------------------------------------

struct ScoringConfig {
    GenRmRewardConfig genrm;
    LengthControlConfig length;
    std::optional<std::int64_t> max_len;  // overlong filtering when set
    bool overlong_in_length_stats = false;
    double advantage_eps = 1e-8;
};

struct ScoredResponse {
    std::int64_t id = 0;
    RewardBreakdown reward;
    double advantage = 0;
    bool masked = false;
};

/// Tiebreaks raw verdicts, aggregates base rewards, applies length control
/// and the quality-gated bonuses, then computes group advantages. Masked
/// (overlong) responses keep their base reward, receive no length terms and
/// a zero advantage; unless configured otherwise they are also left out of
/// the length statistics and the percentile population.
/// Keys: c1, c2, lambda_think, lambda_answer, beta_think, beta_answer,
/// tau_percentile, max_len, overlong_in_length_stats, advantage_eps.
ScoringConfig scoring_config_from(const KvConfig& cfg);

std::vector<ScoredResponse> score_group(const ResponseGroup& group, std::span<const PairVerdict> raw_verdicts,
                                        const ScoringConfig& cfg);

}  // namespace ptkit::reward
