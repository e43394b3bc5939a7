// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/harness.hpp"
#include "ptkit/chat_template.hpp"
#include "ptkit/config.hpp"
#include "ptkit/curriculum.hpp"
#include "ptkit/data_filter.hpp"
#include "ptkit/io.hpp"
#include "ptkit/quant.hpp"
#include "ptkit/reward.hpp"
#include "ptkit/rng.hpp"
#include "ptkit/router.hpp"

using namespace ptkit;
using harness::fixture;

namespace {

// Pinned limits and tolerances.
constexpr double kGenrmSeconds = 1.0;
constexpr double kScheduleSeconds = 1.0;
constexpr double kLengthSeconds = 10.0;
constexpr double kCurriculumSeconds = 30.0;
constexpr double kRouterSeconds = 60.0;
constexpr double kZeroSumTol = 1e-12;
constexpr double kContinuityTol = 1e-12;
constexpr double kBalanceTarget = 1.2;
constexpr double kUnbalancedFloor = 2.0;
constexpr double kParamTarget = 31.6e9;
constexpr double kParamTol = 0.05;
constexpr double kSigmaEnvelope = 3.0;
constexpr std::size_t kCurriculumSeeds = 1024;

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) detail << "first failure: " << what << "; ";
        ok = ok && cond;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// -- 1 ------------------------------------------------------------------------------

// Integer-score recomputation of the judge reward, kept separate from the library.
long genrm_oracle(int ph1, int ph2, int pr, bool viol, int gh1, int gh2, int gr, long c1, long c2) {
    return -c1 * (viol ? 1 : 0) - std::labs(ph1 - gh1) - std::labs(ph2 - gh2) - c2 * std::labs(pr - gr);
}

void criterion_genrm(Check& c) {
    const auto t0 = Clock::now();
    const auto cfg = reward::scoring_config_from(KvConfig::parse(harness::slurp(fixture("rlhf.cfg")))).genrm;
    c.expect(cfg.c1 == 10.0 && cfg.c2 == 1.0, "config c1/c2 are 10/1");
    c.expect(reward::GenRmRewardConfig{}.c1 == 10.0 && reward::GenRmRewardConfig{}.c2 == 1.0, "built-in defaults");
    std::size_t cases = 0, zeros = 0;
    for (int ph1 = 1; ph1 <= 5; ++ph1)
        for (int ph2 = 1; ph2 <= 5; ++ph2)
            for (int pr = 1; pr <= 6; ++pr)
                for (int gh1 = 1; gh1 <= 5; ++gh1)
                    for (int gh2 = 1; gh2 <= 5; ++gh2)
                        for (int gr = 1; gr <= 6; ++gr)
                            for (int v = 0; v < 2; ++v) {
                                reward::JudgePrediction p{double(ph1), double(ph2), double(pr), v == 1};
                                reward::JudgeGroundTruth g{double(gh1), double(gh2), double(gr)};
                                const double got = reward::genrm_reward(p, g, cfg);
                                const long want = genrm_oracle(ph1, ph2, pr, v == 1, gh1, gh2, gr, 10, 1);
                                if (got != static_cast<double>(want)) {
                                    c.expect(false, "grid mismatch");
                                    return;
                                }
                                if (ph1 == gh1 && ph2 == gh2 && pr == gr && v == 0) {
                                    c.expect(got == 0.0, "perfect prediction is 0");
                                    ++zeros;
                                }
                                c.expect(got <= 0.0, "reward never positive");
                                ++cases;
                            }
    const double dt = seconds_since(t0);
    c.expect(zeros == 150, "150 perfect predictions");
    c.expect(dt < kGenrmSeconds, "runtime < 1 s");
    c.detail << cases << " grid points, " << dt << " s";
}

// -- 2 ------------------------------------------------------------------------------

void criterion_schedule(Check& c) {
    const auto t0 = Clock::now();
    for (std::size_t n = 2; n <= 64; ++n) {
        const auto pairs = reward::circular_schedule(n);
        c.expect(pairs.size() == n, "exactly N pairs");
        std::vector<int> as_first(n, 0), as_second(n, 0);
        for (const auto& p : pairs) {
            c.expect(p.first < n && p.second < n && p.first != p.second, "valid distinct indices");
            ++as_first[p.first];
            ++as_second[p.second];
        }
        for (std::size_t i = 0; i < n; ++i)
            c.expect(as_first[i] == 1 && as_second[i] == 1, "judged once in each position");
    }
    const double dt = seconds_since(t0);
    c.expect(dt < kScheduleSeconds, "runtime < 1 s");
    c.detail << "N=2..64, " << dt << " s";
}

// -- 3 ------------------------------------------------------------------------------

reward::ResponseGroup random_group(Rng& rng, std::size_t n) {
    reward::ResponseGroup g{"g", {}};
    const std::int64_t span = 1 + static_cast<std::int64_t>(rng.below(4000));
    for (std::size_t i = 0; i < n; ++i) {
        const auto think = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span)));
        const auto answer = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span)));
        g.responses.push_back({static_cast<std::int64_t>(i), think, answer, think + answer});
    }
    return g;
}

double half_point(Rng& rng) { return 1.0 + 0.5 * static_cast<double>(rng.below(9)); }

void criterion_length(Check& c) {
    const auto t0 = Clock::now();
    Rng rng(0x4c454e);
    const reward::LengthControlConfig cfg;
    double worst_sum = 0, worst_identity = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n = 2 + rng.below(15);
        auto g = random_group(rng, n);
        std::vector<std::int64_t> think, answer;
        for (const auto& r : g.responses) think.push_back(r.think_len), answer.push_back(r.answer_len);
        for (const auto* lens : {&think, &answer}) {
            const auto w = reward::length_weights(*lens);
            const double s = std::accumulate(w.begin(), w.end(), 0.0);
            worst_sum = std::max(worst_sum, std::abs(s));
        }
        std::vector<double> base;
        for (std::size_t i = 0; i < n; ++i) base.push_back(half_point(rng));
        const auto out = reward::final_rewards(g, base, cfg);
        double sf = 0, sb = 0, sbonus = 0;
        for (std::size_t i = 0; i < n; ++i) {
            c.expect(out[i].final == out[i].base + out[i].length_adj_think + out[i].length_adj_answer + out[i].bonus,
                     "final is the exact sum of its parts");
            sf += out[i].final, sb += out[i].base, sbonus += out[i].bonus;
        }
        worst_identity = std::max(worst_identity, std::abs(sf - (sb + sbonus)));

        // tiebreak conserves the pair sum
        const double s = static_cast<double>(1 + rng.below(5));
        const reward::PairVerdict v{0, 1, s, rng.below(2) ? s : static_cast<double>(1 + rng.below(5)),
                                    static_cast<double>(1 + rng.below(6))};
        const auto t = reward::tiebreak(v);
        c.expect(t.s_i + t.s_j == v.s_i + v.s_j, "tiebreak conserves pair sums");

        // monotone in think length at fixed base and answer length
        auto m = g;
        for (auto& r : m.responses) r.answer_len = 100, r.total_len = r.think_len + 100;
        std::vector<double> flat(n, 3.0);
        reward::LengthControlConfig mono = cfg;
        mono.beta_answer = 0;  // the answer bonus would single out an arbitrary tied response
        const auto fm = reward::final_rewards(m, flat, mono);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (m.responses[i].think_len < m.responses[j].think_len)
                    c.expect(fm[i].final >= fm[j].final, "shorter think never scores lower");
    }
    const double dt = seconds_since(t0);
    c.expect(worst_sum <= kZeroSumTol, "centered weights sum to 0");
    c.expect(worst_identity <= kZeroSumTol * 16, "sum of finals = sum of bases + bonuses");
    c.expect(dt < kLengthSeconds, "runtime < 10 s");
    c.detail << "1e4 groups, max |sum w| " << worst_sum << ", max identity gap " << worst_identity << ", " << dt
             << " s";
}

// -- 4 ------------------------------------------------------------------------------

void criterion_gate(Check& c) {
    Rng rng(0x47415445);
    const reward::LengthControlConfig cfg;
    c.expect(cfg.tau_percentile == 80.0, "tau_p defaults to 80");
    std::size_t awarded = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(15);
        auto g = random_group(rng, n);
        if (rng.below(3) == 0)  // force length ties
            for (auto& r : g.responses) r.think_len = r.think_len % 3, r.total_len = r.think_len + r.answer_len;
        std::vector<double> base;
        for (std::size_t i = 0; i < n; ++i) base.push_back(half_point(rng));

        std::vector<double> sorted = base;
        std::sort(sorted.begin(), sorted.end());
        const auto rank = static_cast<std::size_t>(std::ceil(0.80 * static_cast<double>(n)));
        const double gate = sorted[std::clamp<std::size_t>(rank, 1, n) - 1];
        std::size_t kt = 0, ka = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (g.responses[i].think_len < g.responses[kt].think_len) kt = i;
            if (g.responses[i].answer_len < g.responses[ka].answer_len) ka = i;
        }
        const auto out = reward::final_rewards(g, base, cfg);
        for (std::size_t i = 0; i < n; ++i) {
            double want = 0;
            if (i == kt && base[i] >= gate) want += cfg.beta_think;
            if (i == ka && base[i] >= gate) want += cfg.beta_answer;
            c.expect(out[i].bonus == want, "bonus matches the sort-based oracle");
            if (out[i].bonus > 0) {
                ++awarded;
                c.expect(base[i] >= gate, "only above-gate responses are rewarded");
            }
        }
    }
    c.expect(awarded > 100, "the gate is exercised");
    c.detail << "1e3 groups, " << awarded << " bonuses awarded";
}

// -- 5 ------------------------------------------------------------------------------

std::vector<curriculum::TaskProfile> load_profiles() {
    std::vector<curriculum::TaskProfile> out;
    io::for_each_jsonl(harness::slurp(fixture("profiles.jsonl")), 0,
                       [&](const io::json& j, long) { out.push_back(io::profile_from_json(j)); });
    return curriculum::filter_solved(out);
}

void criterion_curriculum(Check& c) {
    const auto t0 = Clock::now();
    const auto profiles = load_profiles();
    std::map<std::string, double> rate;
    for (const auto& p : profiles) rate[p.task_id] = p.pass_rate;

    auto cfg = curriculum::curriculum_config_from(KvConfig::parse(harness::slurp(fixture("cur.cfg"))));
    cfg.mu_start = 0.9, cfg.mu_end = 0.2, cfg.total_steps = 100;

    // fractions within one sample of the configured ratios
    for (std::size_t step = 0; step <= cfg.total_steps; ++step) {
        const auto plan = curriculum::sample_batch(profiles, cfg, step);
        c.expect(plan.entries.size() == cfg.batch_size, "batch size");
        for (const auto& [d, ratio] : cfg.domain_ratios) {
            const double want = ratio * static_cast<double>(cfg.batch_size);
            const auto it = plan.domain_counts.find(d);
            const double got = it == plan.domain_counts.end() ? 0.0 : static_cast<double>(it->second);
            c.expect(std::abs(got - want) <= 1.0, "domain fraction within 1 sample");
        }
    }

    // expected batch mean pass rate, estimated over many seeds per step
    std::vector<double> mean(cfg.total_steps + 1, 0.0);
    for (std::size_t s = 0; s < kCurriculumSeeds; ++s) {
        auto run = cfg;
        run.seed = 1000 + s;
        for (std::size_t step = 0; step <= cfg.total_steps; ++step) {
            const auto plan = curriculum::sample_batch(profiles, run, step);
            double sum = 0;
            for (const auto& id : plan.entries) sum += rate.at(id);
            mean[step] += sum / static_cast<double>(plan.entries.size()) / kCurriculumSeeds;
        }
    }
    std::size_t rises = 0;
    for (std::size_t step = 1; step < mean.size(); ++step) rises += mean[step] > mean[step - 1];
    c.expect(rises == 0, "batch mean pass rate non-increasing");

    // Monte-Carlo selection ratios against the Gaussian density ratio
    curriculum::CurriculumConfig mc;
    mc.domain_ratios = {{"d", 1.0}};
    mc.mu_start = mc.mu_end = 0.9;
    mc.sigma = 0.2;
    mc.batch_size = 1;
    mc.total_steps = 1;
    mc.seed = 77;
    const std::size_t draws = 100000;
    double worst_z = 0;
    for (double other : {0.1, 0.5}) {
        std::vector<curriculum::TaskProfile> two{{"hi", "d", 0.9}, {"lo", "d", other}};
        std::size_t lo = 0;
        for (std::size_t k = 0; k < draws; ++k) lo += curriculum::sample_batch(two, mc, k).entries[0] == "lo";
        const double w_hi = std::exp(-0.0), w_lo = std::exp(-(0.9 - other) * (0.9 - other) / (2 * 0.04));
        const double p = w_lo / (w_hi + w_lo);
        const double sd = std::sqrt(static_cast<double>(draws) * p * (1 - p));
        const double z = std::abs(static_cast<double>(lo) - static_cast<double>(draws) * p) / sd;
        worst_z = std::max(worst_z, z);
        c.expect(z <= kSigmaEnvelope, "selection ratio within 3 sigma");
    }
    const double dt = seconds_since(t0);
    c.expect(dt < kCurriculumSeconds, "runtime < 30 s");
    c.detail << "batch mean " << mean.front() << " -> " << mean.back() << " (" << kCurriculumSeeds
             << " seeds), worst MC z " << worst_z << ", " << dt << " s";
}

// -- 6 ------------------------------------------------------------------------------

void criterion_wsd(Check& c) {
    const curriculum::WsdConfig full;
    curriculum::WsdConfig cfg = full;
    cfg.warmup_tokens = full.warmup_tokens * 1e-6;
    cfg.total_tokens = full.total_tokens * 1e-6;
    c.expect(cfg.warmup_tokens == 8400.0 && cfg.total_tokens == 25e6 && cfg.stable_fraction == 0.8,
             "scaled constants");
    c.expect(curriculum::wsd_lr(cfg.warmup_tokens, cfg) == 1e-3, "lr(warmup_end) = 1e-3");
    c.expect(curriculum::wsd_lr(cfg.total_tokens, cfg) == 1e-5, "lr(total) = 1e-5");
    const auto from_file = curriculum::wsd_config_from(KvConfig::parse(harness::slurp(fixture("wsd.cfg"))));
    c.expect(curriculum::wsd_lr(from_file.warmup_tokens, from_file) == 1e-3 &&
                 curriculum::wsd_lr(from_file.total_tokens, from_file) == 1e-5,
             "unscaled config endpoints");
    double worst = 0;
    for (double b : {cfg.warmup_tokens, cfg.stable_end()}) {
        const double eps = 1e-6;
        worst = std::max(worst, std::abs(curriculum::wsd_lr(b - eps, cfg) - curriculum::wsd_lr(b, cfg)));
        worst = std::max(worst, std::abs(curriculum::wsd_lr(b + eps, cfg) - curriculum::wsd_lr(b, cfg)));
    }
    c.expect(worst <= kContinuityTol, "continuity at both breakpoints");
    c.detail << "max jump at breakpoints " << worst;
}

// -- 7 ------------------------------------------------------------------------------

void criterion_router(Check& c) {
    const auto t0 = Clock::now();
    router::SimulationOptions opts;
    opts.record_loads = false;
    c.expect(opts.router.n_experts == 128 && opts.router.top_k == 6 && opts.router.bias_update_rate == 1e-3,
             "default constants");
    c.expect(opts.steps == 2000, "2000 updates");
    const auto balanced = router::simulate(opts);
    c.expect(balanced.first_step_below_target >= 0 && balanced.first_step_below_target < 2000,
             "balance ratio drops below 1.2");
    c.expect(balanced.final_window_ratio < kBalanceTarget, "final ratio below 1.2");

    auto frozen_bias = opts;
    frozen_bias.router.bias_update_rate = 0.0;
    const auto skewed = router::simulate(frozen_bias);
    const double min_ratio = *std::min_element(skewed.window_ratio.begin(), skewed.window_ratio.end());
    c.expect(min_ratio > kUnbalancedFloor, "u = 0 stays above 2.0");

    const std::size_t E = 128, T = 128, k = 6;
    std::vector<double> probs(T * E, 1.0 / E);
    std::vector<std::size_t> sel;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < k; ++j) sel.push_back((t * k + j) % E);
    const double loss = router::lb_loss(probs, sel, T, opts.router);
    c.expect(std::abs(loss - 1e-4) <= 1e-16, "lb_loss = alpha at uniformity");
    const double dt = seconds_since(t0);
    c.expect(dt < kRouterSeconds, "runtime < 60 s");
    c.detail << "u=1e-3: below 1.2 at step " << balanced.first_step_below_target << ", final "
             << balanced.final_window_ratio << "; u=0: min " << min_ratio << "; " << dt << " s";
}

// -- 8 ------------------------------------------------------------------------------

void criterion_reasoning(Check& c) {
    const std::size_t N = 100000;
    std::vector<chat::Conversation> corpus(N);
    std::string reasoning;
    for (int t = 0; t < 32; ++t) reasoning += "r" + std::to_string(t) + " ";
    for (std::size_t i = 0; i < N; ++i) {
        corpus[i].id = "s" + std::to_string(i);
        corpus[i].messages = {chat::Message{chat::Role::user, "q", {}, {}, {}},
                              chat::Message{chat::Role::assistant, "answer", reasoning, {}, {}}};
    }
    const std::uint64_t seed = 20251216;
    const auto stripped = chat::strip_reasoning(corpus, 0.10, seed);
    const double fs = static_cast<double>(stripped.stripped) / N;
    c.expect(fs >= 0.095 && fs <= 0.105, "stripped fraction in [9.5%, 10.5%]");
    const std::vector<std::size_t> budgets{4, 8, 16};
    const auto truncated = chat::truncate_budget(corpus, 0.03, budgets, seed);
    const double ft = static_cast<double>(truncated.truncated) / N;
    c.expect(ft >= 0.025 && ft <= 0.035, "truncated fraction in [2.5%, 3.5%]");
    std::size_t answers_kept = 0;
    for (const auto& conv : truncated.corpus) answers_kept += conv.messages[1].content == "answer";
    c.expect(answers_kept == N, "answers untouched");
    // sft-prep order: truncation runs on the stripped corpus
    const auto chained = chat::truncate_budget(stripped.corpus, 0.03, budgets, seed);
    const double fc = static_cast<double>(chained.truncated) / N;

    std::size_t convs = 0, checked_markers = 0;
    io::for_each_jsonl(harness::slurp(fixture("multiturn_500.jsonl")), 0, [&](const io::json& j, long) {
        const auto conv = io::conversation_from_json(j);
        const auto last_user = chat::last_user_index(conv);
        for (auto mode : {chat::ReasoningMode::on, chat::ReasoningMode::off}) {
            const auto r = chat::render(conv, mode);
            for (std::size_t i = 0; i < conv.messages.size(); ++i) {
                const auto& m = conv.messages[i];
                if (!m.reasoning) continue;
                const bool current = !last_user || i > *last_user;
                const bool present = r.text.find(*m.reasoning) != std::string::npos;
                c.expect(present == (current && mode == chat::ReasoningMode::on), "only current-turn reasoning");
                ++checked_markers;
            }
            for (const auto& sp : r.included_reasoning_spans)
                c.expect(last_user && sp.message_index > *last_user, "span after the last user message");
        }
        ++convs;
    });
    c.expect(convs == 500, "500 fixture conversations");
    c.detail << "stripped " << fs * 100 << "%, truncated " << ft * 100 << "% (after stripping " << fc * 100
             << "%), " << checked_markers << " reasoning checks over " << convs << " conversations";
}

// -- 9 ------------------------------------------------------------------------------

struct BruteRepetition {
    bool window = false, global = false;
    std::vector<std::string> witness;
};

// Slides over every n-gram start q and counts equal n-grams that start in the
// window ending at q + ngram (window rule) or anywhere before q (global rule).
BruteRepetition brute_repetition(const std::vector<std::string>& toks, const filter::RepetitionConfig& cfg) {
    BruteRepetition out;
    const std::size_t n = cfg.ngram;
    if (toks.size() < n) return out;
    const std::size_t grams = toks.size() - n + 1;
    std::map<std::vector<std::string>, int> intern;
    std::vector<int> id(grams);
    for (std::size_t p = 0; p < grams; ++p)
        id[p] = intern.emplace(std::vector<std::string>(toks.begin() + p, toks.begin() + p + n), intern.size())
                    .first->second;
    long first_window = -1, first_global = -1;
    for (std::size_t q = 0; q < grams; ++q) {
        std::size_t in_window = 0, total = 0;
        for (std::size_t s = 0; s <= q; ++s) {
            if (id[s] != id[q]) continue;
            ++total;
            if (q + n - s <= cfg.window) ++in_window;
        }
        if (first_window < 0 && in_window >= cfg.window_threshold) first_window = static_cast<long>(q);
        if (first_global < 0 && total >= cfg.global_threshold) first_global = static_cast<long>(q);
    }
    out.window = first_window >= 0;
    out.global = first_global >= 0;
    const long at = out.window ? first_window : first_global;
    if (at >= 0) out.witness.assign(toks.begin() + at, toks.begin() + at + static_cast<long>(n));
    return out;
}

void criterion_filter(Check& c) {
    Rng rng(0x524550);
    std::size_t fails = 0, windows = 0, globals = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        filter::RepetitionConfig cfg;
        cfg.ngram = 2 + rng.below(7);
        cfg.window = cfg.ngram + rng.below(513 - cfg.ngram);
        cfg.window_threshold = 2 + rng.below(7);
        cfg.global_threshold = 2 + rng.below(24);
        const std::size_t len = rng.below(513);
        const std::size_t vocab = 1 + rng.below(rng.below(2) ? 4 : 40);
        std::vector<std::string> toks;
        for (std::size_t i = 0; i < len; ++i) toks.push_back("t" + std::to_string(rng.below(vocab)));
        const auto got = filter::repetition_check(toks, cfg);
        const auto want = brute_repetition(toks, cfg);
        const bool same = got.window_violation == want.window && got.global_violation == want.global &&
                          got.passed == !(want.window || want.global) &&
                          (got.passed || (got.witness && got.witness->ngram == want.witness));
        if (!same) {
            c.expect(false, "repetition mismatch at trial " + std::to_string(trial));
            break;
        }
        fails += !got.passed, windows += want.window, globals += want.global;
    }
    c.expect(fails > 1000 && fails < 9000, "suite mixes passing and failing streams");

    chat::Conversation hallucinated;
    hallucinated.messages = {chat::Message{chat::Role::user, "what is 2+2", {}, {}, {}},
                             chat::Message{chat::Role::assistant, "", {}, {{"python", {{"code", "2+2"}}}}, {}}};
    c.expect(!filter::structural_check(hallucinated).passed, "tool call without tool definitions is malformed");
    const auto pats = filter::default_alignment_patterns();
    for (const char* text : {"as our nation has always taught", "Our party knows best", "this reflects our values"})
        c.expect(filter::alignment_filter(text, pats).has_value(), std::string("alignment trigger: ") + text);
    c.expect(!filter::alignment_filter("the values of x are positive", pats), "neutral text passes");

    std::vector<chat::Conversation> corpus;
    io::for_each_jsonl(harness::slurp(fixture("conversations.jsonl")), 0,
                       [&](const io::json& j, long) { corpus.push_back(io::conversation_from_json(j)); });
    const auto rules = filter::parse_rules(harness::slurp(fixture("rules.cfg")));
    const auto outcome = filter::run_filter(corpus, rules);
    const auto& r = outcome.report;
    c.expect(r.reconciles(), "report reconciles");
    c.expect(r.input_count == 240 && r.kept == 120 && r.rejected_structural == 60 && r.rejected_repetition == 30 &&
                 r.rejected_alignment == 30,
             "fixture counts 120/60/30/30");
    std::size_t listed = 0;
    for (const auto& [rule, ids] : r.per_rule_samples) listed += ids.size();
    c.expect(listed + r.kept == r.input_count && outcome.kept.size() == r.kept, "per-rule ids reconcile");
    c.detail << "1e4 streams (" << fails << " flagged: " << windows << " window, " << globals
             << " global), fixture kept " << r.kept << "/" << r.input_count;
}

// -- 10 ------------------------------------------------------------------------------

void criterion_quant(Check& c) {
    const auto pattern = quant::LayerPattern::parse(harness::slurp(fixture("nano_pattern.txt")));
    c.expect(pattern.layers.size() == 52 && pattern.count(quant::LayerKind::attention) == 6, "52 layers, 6 attention");
    for (std::size_t i = 0; i < pattern.layers.size(); ++i)
        if (pattern.layers[i] == quant::LayerKind::attention)
            c.expect(i > 0 && pattern.layers[i - 1] == quant::LayerKind::mamba, "attention preceded by mamba");
    const auto pl = quant::plan(pattern, quant::QuantPolicy::selective());
    c.expect(pl.count(quant::Precision::bf16) == 12, "12 BF16 layers");
    c.expect(pl.count(quant::LayerKind::attention, quant::Precision::bf16) == 6, "6 attention BF16");
    c.expect(pl.count(quant::LayerKind::mamba, quant::Precision::bf16) == 6, "6 mamba BF16");
    c.expect(pl.kv_cache == quant::Precision::fp8, "KV cache FP8");
    c.expect(pl.conv1d == quant::Precision::bf16, "conv1d BF16");
    const auto dims = quant::ModelDims::from_config(KvConfig::parse(harness::slurp(fixture("dims.cfg"))));
    const double params = static_cast<double>(quant::total_params(pattern, dims));
    const double rel = std::abs(params - kParamTarget) / kParamTarget;
    c.expect(rel <= kParamTol, "parameter count within 5% of 31.6B");
    c.detail << "params " << params << " (" << rel * 100 << "% off)";
}

// -- 11 ------------------------------------------------------------------------------

void criterion_determinism(Check& c) {
    const auto dir = harness::scratch("acceptance-det");
    const std::string f = std::string(PTKIT_FIXTURES) + "/";
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"render-template", "render-template --in " + f + "multiturn_500.jsonl --mode on"},
        {"sft-prep", "sft-prep --in " + f + "multiturn_500.jsonl --strip-frac 0.10 --trunc-frac 0.03 --budgets 4 8 16"},
        {"score-group", "score-group --group " + f + "groups.jsonl --verdicts " + f + "verdicts.jsonl --config " + f +
                            "rlhf_overlong.cfg"},
        {"schedule-curriculum", "schedule-curriculum --profiles " + f + "profiles.jsonl --config " + f +
                                    "cur.cfg --steps 0..100"},
        {"lr", "lr --config " + f + "wsd.cfg --tokens 0 4.2e9 8.4e9 1e13 2e13 2.2e13 2.5e13"},
        {"filter-data", "filter-data --in " + f + "conversations.jsonl --rules " + f + "rules.cfg"},
        {"label-dpo", "label-dpo --rollouts " + f + "rollouts.jsonl --pairs-per-prompt 2"},
        {"simulate-router", "simulate-router --steps 300"},
        {"plan-quant", "plan-quant --pattern " + f + "nano_pattern.txt --dims " + f + "dims.cfg"},
        {"prompt-sensitivity", "prompt-sensitivity --in " + f + "accuracy.jsonl"},
    };
    std::size_t compared = 0;
    for (const auto& [name, args] : commands) {
        std::vector<std::string> digests;
        for (const char* variant : {"", "", " --shards 4"}) {
            const auto out = (dir / (name + ".out")).string(), rep = (dir / (name + ".report")).string();
            const auto r = harness::run_cli(args + " --seed 42 --out " + out + " --report " + rep + variant, dir);
            c.expect(r.exit_code == 0, name + " exits 0: " + r.err.substr(0, 200));
            const auto manifest = io::json::parse(harness::slurp((dir / "stderr.txt").string()));
            const auto out_text = harness::slurp(out), rep_text = harness::slurp(rep);
            c.expect(manifest["output_digests"]["out"] == harness::sha256(out_text), name + " manifest digest");
            c.expect(!out_text.empty(), name + " produced output");
            digests.push_back(harness::sha256(out_text) + ":" + harness::sha256(rep_text));
        }
        c.expect(digests[0] == digests[1], name + " rerun identical");
        c.expect(digests[0] == digests[2], name + " sharded run identical");
        ++compared;
    }
    c.detail << compared << " subcommands x (2 reruns + 4 shards)";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
        {"1 genrm reward grid", criterion_genrm},
        {"2 circular scheduling", criterion_schedule},
        {"3 length control algebra", criterion_length},
        {"4 quality gate", criterion_gate},
        {"5 curriculum", criterion_curriculum},
        {"6 wsd schedule", criterion_wsd},
        {"7 router balance", criterion_router},
        {"8 reasoning control", criterion_reasoning},
        {"9 filtering", criterion_filter},
        {"10 quantization plan", criterion_quant},
        {"11 determinism", criterion_determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail << "exception: " << e.what();
        }
        std::cout << (c.ok ? "PASS " : "FAIL ") << name << " | " << c.detail.str() << std::endl;
        failed += !c.ok;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
