// SPDX-License-Identifier: Apache-2.0
#include "ptkit/router.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "ptkit/error.hpp"
#include "ptkit/rng.hpp"

namespace ptkit::router {

void RouterConfig::validate() const {
    if (n_experts == 0) throw Error(ErrorCode::config, "n_experts must be positive");
    if (top_k == 0 || top_k > n_experts) throw Error(ErrorCode::config, "need 0 < top_k <= n_experts");
    if (!(bias_update_rate >= 0)) throw Error(ErrorCode::config, "bias_update_rate must be non-negative");
    if (!(lb_coeff >= 0)) throw Error(ErrorCode::config, "lb_coeff must be non-negative");
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

RoutingDecision route(std::span<const double> logits, std::span<const double> bias, const RouterConfig& cfg) {
    if (logits.size() != cfg.n_experts || bias.size() != cfg.n_experts)
        throw Error(ErrorCode::shape, "expected " + std::to_string(cfg.n_experts) + " logits and biases, got " +
                                          std::to_string(logits.size()) + " and " + std::to_string(bias.size()));
    std::vector<double> scores(logits.size());
    std::transform(logits.begin(), logits.end(), scores.begin(), sigmoid);

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    const auto k = static_cast<std::ptrdiff_t>(cfg.top_k);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = scores[a] + bias[a], kb = scores[b] + bias[b];
        return ka != kb ? ka > kb : a < b;
    });

    RoutingDecision d;
    d.selected.assign(order.begin(), order.begin() + k);
    double total = 0;
    for (auto e : d.selected) total += scores[e];
    for (auto e : d.selected) d.gates.push_back(scores[e] / total);
    d.shared_gate = 1.0;
    return d;
}

double lb_loss(std::span<const double> gate_probs, std::span<const std::size_t> selections, std::size_t tokens,
               const RouterConfig& cfg) {
    const std::size_t E = cfg.n_experts, k = cfg.top_k;
    if (tokens == 0) throw Error(ErrorCode::shape, "load-balancing loss over zero tokens");
    if (gate_probs.size() != tokens * E || selections.size() != tokens * k)
        throw Error(ErrorCode::shape, "gate_probs must be tokens x experts and selections tokens x top_k");
    std::vector<double> f(E, 0.0), p(E, 0.0);
    for (auto e : selections) {
        if (e >= E) throw Error(ErrorCode::shape, "selected expert index out of range");
        f[e] += 1.0;
    }
    for (std::size_t t = 0; t < tokens; ++t)
        for (std::size_t e = 0; e < E; ++e) p[e] += gate_probs[t * E + e];
    const double assignments = static_cast<double>(tokens * k);
    double sum = 0;
    for (std::size_t e = 0; e < E; ++e) sum += (f[e] / assignments) * (p[e] / static_cast<double>(tokens));
    return cfg.lb_coeff * static_cast<double>(E) * sum;
}

double lb_loss_scoped(std::span<const double> gate_probs, std::span<const std::size_t> selections,
                      std::span<const std::size_t> sequence_lengths, LossScope scope, const RouterConfig& cfg) {
    const std::size_t tokens = std::accumulate(sequence_lengths.begin(), sequence_lengths.end(), std::size_t{0});
    if (scope == LossScope::batch) return lb_loss(gate_probs, selections, tokens, cfg);
    if (gate_probs.size() != tokens * cfg.n_experts || selections.size() != tokens * cfg.top_k)
        throw Error(ErrorCode::shape, "sequence lengths do not match the routed token count");
    double total = 0;
    std::size_t offset = 0, sequences = 0;
    for (auto len : sequence_lengths) {
        if (len == 0) continue;
        total += lb_loss(gate_probs.subspan(offset * cfg.n_experts, len * cfg.n_experts),
                         selections.subspan(offset * cfg.top_k, len * cfg.top_k), len, cfg);
        offset += len;
        ++sequences;
    }
    if (sequences == 0) throw Error(ErrorCode::shape, "no non-empty sequences");
    return total / static_cast<double>(sequences);
}

Router::Router(RouterConfig cfg, std::size_t hidden_dim, std::uint64_t seed)
    : cfg_(cfg), hidden_dim_(hidden_dim), bias_(cfg.n_experts, 0.0), cumulative_load_(cfg.n_experts, 0) {
    cfg_.validate();
    Rng rng(mix_seed({seed, 0x524f55544552ULL}));
    weights_.resize(cfg_.n_experts * hidden_dim_);
    const double scale = hidden_dim_ ? 1.0 / std::sqrt(static_cast<double>(hidden_dim_)) : 0.0;
    for (auto& w : weights_) w = rng.normal() * scale;
}

std::vector<double> Router::logits(std::span<const double> hidden) const {
    if (hidden.size() != hidden_dim_) throw Error(ErrorCode::shape, "hidden state has the wrong dimension");
    std::vector<double> out(cfg_.n_experts, 0.0);
    for (std::size_t e = 0; e < cfg_.n_experts; ++e)
        for (std::size_t j = 0; j < hidden_dim_; ++j) out[e] += weights_[e * hidden_dim_ + j] * hidden[j];
    return out;
}

RoutingDecision Router::route(std::span<const double> logits) const { return router::route(logits, bias_, cfg_); }

void Router::update_bias(std::span<const double> batch_loads) {
    if (batch_loads.size() != cfg_.n_experts) throw Error(ErrorCode::shape, "load vector has the wrong length");
    if (std::any_of(batch_loads.begin(), batch_loads.end(), [](double x) { return !(x >= 0); }))
        throw Error(ErrorCode::invalid_argument, "expert loads must be non-negative");
    const double mean = std::accumulate(batch_loads.begin(), batch_loads.end(), 0.0) / static_cast<double>(cfg_.n_experts);
    for (std::size_t e = 0; e < cfg_.n_experts; ++e) {
        const double gap = mean - batch_loads[e];
        const double sign = gap > 0 ? 1.0 : (gap < 0 ? -1.0 : 0.0);
        bias_[e] += cfg_.bias_update_rate * sign;
        cumulative_load_[e] += static_cast<std::uint64_t>(std::llround(batch_loads[e]));
    }
}

void Router::set_bias(std::span<const double> bias) {
    if (bias.size() != cfg_.n_experts) throw Error(ErrorCode::shape, "bias vector has the wrong length");
    bias_.assign(bias.begin(), bias.end());
}

void Router::update_weights(std::span<const double> delta) {
    if (frozen_) throw Error(ErrorCode::frozen, "router weights are frozen; only the expert bias may change");
    if (delta.size() != weights_.size()) throw Error(ErrorCode::shape, "weight delta has the wrong size");
    for (std::size_t i = 0; i < delta.size(); ++i) weights_[i] += delta[i];
}

FrozenRouter freeze_router(Router& router) { return FrozenRouter(router); }

SimulationReport simulate(const SimulationOptions& opts) {
    const RouterConfig& cfg = opts.router;
    cfg.validate();
    if (opts.tokens_per_step == 0 || opts.window == 0) throw Error(ErrorCode::config, "tokens_per_step and window must be positive");
    const std::size_t E = cfg.n_experts;

    Rng offsets_rng(mix_seed({opts.seed, 0x4f4646534554ULL}));
    std::vector<double> offset(E);
    for (auto& o : offset) o = opts.skew * offsets_rng.normal();

    Router router(cfg, 0, opts.seed);
    Rng rng(mix_seed({opts.seed, 0x544f4b454e53ULL}));
    SimulationReport report;
    std::deque<std::vector<double>> trailing;
    std::vector<double> pooled(E, 0.0);
    std::vector<double> logits(E), probs(opts.tokens_per_step * E);
    std::vector<std::size_t> selections(opts.tokens_per_step * cfg.top_k);

    for (std::size_t step = 0; step < opts.steps; ++step) {
        std::vector<double> loads(E, 0.0);
        for (std::size_t t = 0; t < opts.tokens_per_step; ++t) {
            for (std::size_t e = 0; e < E; ++e) logits[e] = offset[e] + opts.noise * rng.normal();
            const auto d = router.route(logits);
            double total = 0;
            for (std::size_t e = 0; e < E; ++e) total += probs[t * E + e] = sigmoid(logits[e]);
            for (std::size_t e = 0; e < E; ++e) probs[t * E + e] /= total;
            for (std::size_t j = 0; j < cfg.top_k; ++j) {
                selections[t * cfg.top_k + j] = d.selected[j];
                loads[d.selected[j]] += 1.0;
            }
        }
        const double mean = static_cast<double>(opts.tokens_per_step * cfg.top_k) / static_cast<double>(E);
        report.step_ratio.push_back(*std::max_element(loads.begin(), loads.end()) / mean);
        report.step_lb_loss.push_back(lb_loss(probs, selections, opts.tokens_per_step, cfg));

        for (std::size_t e = 0; e < E; ++e) pooled[e] += loads[e];
        trailing.push_back(loads);
        if (trailing.size() > opts.window) {
            for (std::size_t e = 0; e < E; ++e) pooled[e] -= trailing.front()[e];
            trailing.pop_front();
        }
        const double pooled_mean = mean * static_cast<double>(trailing.size());
        const double ratio = *std::max_element(pooled.begin(), pooled.end()) / pooled_mean;
        report.window_ratio.push_back(ratio);
        if (report.first_step_below_target < 0 && trailing.size() == opts.window && ratio < opts.target_ratio)
            report.first_step_below_target = static_cast<long>(step);

        if (opts.record_loads) {
            report.step_loads.emplace_back(loads.begin(), loads.end());
        }
        router.update_bias(loads);
        if (opts.record_loads) report.bias_trajectory.emplace_back(router.bias().begin(), router.bias().end());
    }
    report.final_bias.assign(router.bias().begin(), router.bias().end());
    report.final_window_ratio = report.window_ratio.empty() ? 0.0 : report.window_ratio.back();
    return report;
}

}  // namespace ptkit::router
