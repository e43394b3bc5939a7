// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "doctest.h"
#include "ptkit/curriculum.hpp"
#include "ptkit/error.hpp"

using namespace ptkit;
using namespace ptkit::curriculum;

namespace {

std::vector<TaskProfile> pool(const std::string& domain, std::size_t n, double rate) {
    std::vector<TaskProfile> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({domain + std::to_string(i), domain, rate});
    return out;
}

}  // namespace

TEST_CASE("filter_solved") {
    auto solved = pool("m", 5, 1.0);
    CHECK(filter_solved(solved).empty());
    auto open = pool("m", 5, 0.3);
    CHECK(filter_solved(open).size() == 5);
    auto mixed = pool("m", 4, 0.2);
    mixed.push_back({"x", "m", 1.0});
    CHECK(filter_solved(mixed).size() == 4);
}

TEST_CASE("target mean ramps linearly and holds") {
    CurriculumConfig cfg;
    cfg.domain_ratios = {{"m", 1.0}};
    CHECK(target_mean(cfg, 0) == 0.9);
    CHECK(target_mean(cfg, 100) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(target_mean(cfg, 50) == doctest::Approx(0.55));
    CHECK(target_mean(cfg, 500) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("quotas match ratios and sum to the batch") {
    CurriculumConfig cfg;
    cfg.batch_size = 64;
    cfg.domain_ratios = {{"math", 0.5}, {"code", 0.3}, {"tools", 0.2}};
    auto q = domain_quotas(cfg);
    std::size_t sum = 0;
    for (const auto& [d, n] : q) {
        CHECK(std::abs(static_cast<double>(n) - cfg.domain_ratios[d] * 64) <= 1.0);
        sum += n;
    }
    CHECK(sum == 64);
}

TEST_CASE("sample_batch on a constant pool") {
    CurriculumConfig cfg;
    cfg.batch_size = 10;
    cfg.domain_ratios = {{"a", 0.5}, {"b", 0.5}};
    auto profiles = pool("a", 20, 0.9);
    auto more = pool("b", 20, 0.9);
    profiles.insert(profiles.end(), more.begin(), more.end());
    auto plan = sample_batch(profiles, cfg, 0);
    CHECK(plan.entries.size() == 10);
    CHECK(plan.domain_counts["a"] == 5);
    CHECK(plan.domain_counts["b"] == 5);
    CHECK(std::set<std::string>(plan.entries.begin(), plan.entries.end()).size() == 10);
    CHECK(!plan.with_replacement());
    auto again = sample_batch(profiles, cfg, 0);
    CHECK(again.entries == plan.entries);
}

TEST_CASE("small pools fall back to replacement") {
    CurriculumConfig cfg;
    cfg.batch_size = 8;
    cfg.domain_ratios = {{"a", 1.0}};
    auto profiles = pool("a", 3, 0.5);
    auto plan = sample_batch(profiles, cfg, 1);
    CHECK(plan.entries.size() == 8);
    CHECK(plan.with_replacement());
}

TEST_CASE("missing domain pool is an error") {
    CurriculumConfig cfg;
    cfg.batch_size = 4;
    cfg.domain_ratios = {{"a", 0.5}, {"b", 0.5}};
    auto profiles = pool("a", 10, 0.5);
    CHECK_THROWS_AS(sample_batch(profiles, cfg, 0), Error);
}

TEST_CASE("config validation") {
    CurriculumConfig cfg;
    cfg.domain_ratios = {{"a", 0.7}, {"b", 0.7}};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.domain_ratios = {{"a", 1.0}};
    cfg.sigma = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    auto parsed = curriculum_config_from(KvConfig::parse("ratio.math = 0.6\nratio.code = 0.4\nbatch_size = 32\n"));
    CHECK(parsed.domain_ratios.size() == 2);
    CHECK(parsed.batch_size == 32);
}

TEST_CASE("wsd schedule") {
    WsdConfig cfg;
    CHECK(wsd_lr(cfg.warmup_tokens, cfg) == 1e-3);
    CHECK(wsd_lr(cfg.total_tokens, cfg) == 1e-5);
    CHECK(wsd_lr(cfg.warmup_tokens / 2, cfg) == doctest::Approx(5e-4).epsilon(1e-15));
    CHECK(wsd_lr(cfg.stable_end(), cfg) == 1e-3);
    CHECK(wsd_lr(0, cfg) == 0.0);
    CHECK_THROWS_AS(wsd_lr(cfg.total_tokens * 2, cfg), Error);
    CHECK_THROWS_AS(wsd_lr(-1, cfg), Error);
    double prev = 1.0;
    for (int k = 0; k <= 100; ++k) {
        double t = cfg.stable_end() + (cfg.total_tokens - cfg.stable_end()) * k / 100.0;
        double lr = wsd_lr(t, cfg);
        CHECK(lr <= prev);
        prev = lr;
    }
    WsdConfig bad;
    bad.lr_min = 1e-2;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("prompt sensitivity") {
    std::vector<std::vector<double>> same{{0.5, 0.6}, {0.5, 0.6}};
    CHECK(prompt_sensitivity(same) == 0.0);
    std::vector<std::vector<double>> two{{0.6, 0.6}, {0.7, 0.9}};
    CHECK(prompt_sensitivity(two) == doctest::Approx(0.1).epsilon(1e-12));
    std::vector<std::vector<double>> swapped{{0.6, 0.6}, {0.9, 0.7}};
    CHECK(prompt_sensitivity(swapped) == prompt_sensitivity(two));
    std::vector<std::vector<double>> one{{0.6, 0.7}};
    CHECK_THROWS_AS(prompt_sensitivity(one), Error);
}
