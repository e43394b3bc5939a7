// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ptkit/config.hpp"

namespace ptkit::quant {

enum class LayerKind { mamba, attention, moe };
enum class Precision { bf16, fp8 };

const char* to_string(LayerKind kind) noexcept;
const char* to_string(Precision p) noexcept;
LayerKind parse_kind(std::string_view text);
Precision parse_precision(std::string_view text);
std::size_t bytes_per_element(Precision p) noexcept;

struct LayerPattern {
    std::vector<LayerKind> layers;

    /// One kind per line; '#' comments and blank lines are skipped. Errors carry the line.
    static LayerPattern parse(std::string_view text);
    /// Compact notation: M = mamba, * = attention, E = moe.
    static LayerPattern from_compact(std::string_view code);

    void validate() const;
    std::size_t count(LayerKind kind) const;
};

enum class MambaMode { mixed, fp8, bf16 };

struct QuantPolicy {
    Precision attention = Precision::bf16;
    MambaMode mamba = MambaMode::mixed;  // mixed: only mamba layers feeding attention stay BF16
    Precision moe = Precision::fp8;
    Precision kv_cache = Precision::fp8;

    static QuantPolicy selective();
    static QuantPolicy all_fp8();
    static QuantPolicy all_bf16();
    /// "selective", "all_fp8", "all_bf16", or a comma list such as
    /// "attention=fp8,mamba=mixed,kv=bf16" applied on top of selective.
    static QuantPolicy parse(std::string_view text);
};

struct LayerPlan {
    LayerKind kind;
    Precision weights;
    std::string note;
};

struct PrecisionPlan {
    std::vector<LayerPlan> per_layer;
    Precision kv_cache = Precision::fp8;
    Precision conv1d = Precision::bf16;
    std::vector<std::string> warnings;

    std::size_t count(LayerKind kind, Precision p) const;
    std::size_t count(Precision p) const;
    LayerPattern pattern() const;
};

PrecisionPlan plan(const LayerPattern& pattern, const QuantPolicy& policy);

struct ModelDims {
    std::size_t model_dim = 0;
    std::size_t vocab_size = 0;
    bool tied_embeddings = false;
    std::size_t q_heads = 0, kv_heads = 0, head_dim = 0;
    std::size_t mamba_heads = 0, mamba_head_dim = 0, mamba_state_dim = 0, mamba_groups = 0, conv_kernel = 0;
    std::size_t n_experts = 0, expert_dim = 0, n_shared_experts = 0, shared_expert_dim = 0;

    /// Every dimension key must be present; a missing one is Error(config).
    static ModelDims from_config(const KvConfig& cfg);
    static ModelDims nano_defaults();
    void validate() const;
};

struct LayerParams {
    std::uint64_t weights = 0;  // quantizable part at the layer's precision
    std::uint64_t conv1d = 0;   // mamba conv1d, always at the plan's conv1d precision
};

LayerParams layer_params(LayerKind kind, const ModelDims& dims);
std::uint64_t embedding_params(const ModelDims& dims);
std::uint64_t total_params(const LayerPattern& pattern, const ModelDims& dims);

struct MemoryEstimate {
    std::map<std::string, std::uint64_t> bytes;   // attention, mamba, moe, conv1d, embeddings
    std::uint64_t layer_weight_bytes = 0;          // attention + mamba + moe
    std::uint64_t total_bytes = 0;
    std::uint64_t total_params = 0;
    std::uint64_t kv_cache_bytes_per_token = 0;
};

/// Embeddings and norms are held in BF16 regardless of policy.
MemoryEstimate memory_estimate(const LayerPattern& pattern, const PrecisionPlan& plan, const ModelDims& dims);

}  // namespace ptkit::quant
