// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ptkit::router {

struct RouterConfig {
    std::size_t n_experts = 128;
    std::size_t top_k = 6;
    std::size_t n_shared = 2;
    double bias_update_rate = 1e-3;
    double lb_coeff = 1e-4;

    void validate() const;
};

struct RoutingDecision {
    std::vector<std::size_t> selected;  // top_k routed experts, best first
    std::vector<double> gates;          // raw sigmoid scores, renormalized
    double shared_gate = 1.0;           // combined weight of the always-on shared experts
};

double sigmoid(double x) noexcept;

/// Selection by score + bias (ties to the lower index); gates use the raw
/// sigmoid scores only, so bias never changes a weight.
RoutingDecision route(std::span<const double> logits, std::span<const double> bias, const RouterConfig& cfg);

/// Load-balancing loss alpha * E * sum_i f_i * p_i, where f_i is the share of
/// routed assignments that went to expert i and p_i the mean gate probability.
/// `gate_probs` is tokens x experts row-major, `selections` tokens x top_k.
double lb_loss(std::span<const double> gate_probs, std::span<const std::size_t> selections, std::size_t tokens,
               const RouterConfig& cfg);

enum class LossScope { batch, sequence };

/// Batch scope pools all tokens; sequence scope averages the per-sequence
/// loss over consecutive sequences of the given lengths.
double lb_loss_scoped(std::span<const double> gate_probs, std::span<const std::size_t> selections,
                      std::span<const std::size_t> sequence_lengths, LossScope scope, const RouterConfig& cfg);

/// Router weights, expert bias and accumulated load. Bias updates are always
/// allowed; weight updates are refused once frozen.
class Router {
public:
    Router(RouterConfig cfg, std::size_t hidden_dim, std::uint64_t seed);

    const RouterConfig& config() const { return cfg_; }
    std::size_t hidden_dim() const { return hidden_dim_; }
    std::span<const double> bias() const { return bias_; }
    std::span<const std::uint64_t> cumulative_load() const { return cumulative_load_; }
    std::span<const double> weights() const { return weights_; }
    bool frozen() const { return frozen_; }

    /// logits = W h, W is experts x hidden.
    std::vector<double> logits(std::span<const double> hidden) const;
    RoutingDecision route(std::span<const double> logits) const;

    /// b_i += u * sign(mean_load - load_i); loads accumulate.
    void update_bias(std::span<const double> batch_loads);
    void set_bias(std::span<const double> bias);

    /// W += delta. Throws Error(frozen) after freeze().
    void update_weights(std::span<const double> delta);
    void freeze() { frozen_ = true; }

private:
    RouterConfig cfg_;
    std::size_t hidden_dim_;
    std::vector<double> weights_;
    std::vector<double> bias_;
    std::vector<std::uint64_t> cumulative_load_;
    bool frozen_ = false;
};

/// Non-owning frozen view: routing and bias updates pass through, weight
/// mutation is rejected.
class FrozenRouter {
public:
    explicit FrozenRouter(Router& router) : router_(&router) { router.freeze(); }

    RoutingDecision route(std::span<const double> logits) const { return router_->route(logits); }
    void update_bias(std::span<const double> batch_loads) { router_->update_bias(batch_loads); }
    void update_weights(std::span<const double> delta) { router_->update_weights(delta); }
    const Router& router() const { return *router_; }

private:
    Router* router_;
};

FrozenRouter freeze_router(Router& router);

// -- balance simulation -----------------------------------------------------------

struct SimulationOptions {
    RouterConfig router;
    std::size_t steps = 2000;
    std::size_t tokens_per_step = 512;
    std::uint64_t seed = 0;
    double skew = 1.0;         // spread of the persistent per-expert logit offsets
    double noise = 1.0;        // per-token logit noise
    std::size_t window = 50;   // trailing steps pooled for the balance ratio
    double target_ratio = 1.2;
    bool record_loads = true;
};

struct SimulationReport {
    std::vector<std::vector<std::uint32_t>> step_loads;  // per step, per expert (when recorded)
    std::vector<double> step_ratio;                      // max/mean of that step's loads
    std::vector<double> window_ratio;                    // max/mean pooled over the trailing window
    std::vector<double> step_lb_loss;                    // batch-scope loss per step
    std::vector<std::vector<double>> bias_trajectory;    // bias after each update (when recorded)
    std::vector<double> final_bias;
    long first_step_below_target = -1;                   // first step whose window ratio < target
    double final_window_ratio = 0;
};

/// Token logits are expert_offset + noise * N(0,1), where the offsets are a
/// fixed skewed draw. Each step routes a batch, records its load histogram
/// and then applies one bias update.
SimulationReport simulate(const SimulationOptions& opts);

}  // namespace ptkit::router
