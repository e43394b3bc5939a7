// SPDX-License-Identifier: Apache-2.0
#include "ptkit/quant.hpp"

#include <algorithm>
#include <cctype>

#include "ptkit/error.hpp"

namespace ptkit::quant {

namespace {

std::string lower_trimmed(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

const char* to_string(LayerKind kind) noexcept {
    switch (kind) {
        case LayerKind::mamba: return "mamba";
        case LayerKind::attention: return "attention";
        case LayerKind::moe: return "moe";
    }
    return "?";
}

const char* to_string(Precision p) noexcept { return p == Precision::bf16 ? "BF16" : "FP8"; }

LayerKind parse_kind(std::string_view text) {
    const auto s = lower_trimmed(text);
    if (s == "mamba") return LayerKind::mamba;
    if (s == "attention") return LayerKind::attention;
    if (s == "moe") return LayerKind::moe;
    throw Error(ErrorCode::parse, "unknown layer kind '" + std::string(text) + "'");
}

Precision parse_precision(std::string_view text) {
    const auto s = lower_trimmed(text);
    if (s == "bf16") return Precision::bf16;
    if (s == "fp8") return Precision::fp8;
    throw Error(ErrorCode::config, "unknown precision '" + std::string(text) + "'");
}

std::size_t bytes_per_element(Precision p) noexcept { return p == Precision::bf16 ? 2 : 1; }

LayerPattern LayerPattern::parse(std::string_view text) {
    LayerPattern p;
    long line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto s = lower_trimmed(line);
        if (s.empty() || s.front() == '#') continue;
        try {
            p.layers.push_back(parse_kind(s));
        } catch (const Error& e) {
            throw Error(ErrorCode::parse, "pattern line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    p.validate();
    return p;
}

LayerPattern LayerPattern::from_compact(std::string_view code) {
    LayerPattern p;
    for (char c : code) {
        switch (c) {
            case 'M': p.layers.push_back(LayerKind::mamba); break;
            case '*': p.layers.push_back(LayerKind::attention); break;
            case 'E': p.layers.push_back(LayerKind::moe); break;
            default: throw Error(ErrorCode::parse, std::string("unknown layer code '") + c + "'");
        }
    }
    p.validate();
    return p;
}

void LayerPattern::validate() const {
    if (layers.empty()) throw Error(ErrorCode::invalid_argument, "layer pattern is empty");
}

std::size_t LayerPattern::count(LayerKind kind) const {
    return static_cast<std::size_t>(std::count(layers.begin(), layers.end(), kind));
}

QuantPolicy QuantPolicy::selective() { return {}; }
QuantPolicy QuantPolicy::all_fp8() { return {Precision::fp8, MambaMode::fp8, Precision::fp8, Precision::fp8}; }
QuantPolicy QuantPolicy::all_bf16() { return {Precision::bf16, MambaMode::bf16, Precision::bf16, Precision::bf16}; }

QuantPolicy QuantPolicy::parse(std::string_view text) {
    const auto s = lower_trimmed(text);
    if (s == "selective") return selective();
    if (s == "all_fp8") return all_fp8();
    if (s == "all_bf16") return all_bf16();
    QuantPolicy p = selective();
    std::string_view rest = s;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        auto item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw Error(ErrorCode::config, "unknown policy '" + std::string(text) + "'");
        const auto key = lower_trimmed(item.substr(0, eq));
        const auto val = lower_trimmed(item.substr(eq + 1));
        if (key == "attention") p.attention = parse_precision(val);
        else if (key == "moe") p.moe = parse_precision(val);
        else if (key == "kv" || key == "kv_cache") p.kv_cache = parse_precision(val);
        else if (key == "mamba") {
            if (val == "mixed") p.mamba = MambaMode::mixed;
            else p.mamba = parse_precision(val) == Precision::bf16 ? MambaMode::bf16 : MambaMode::fp8;
        } else
            throw Error(ErrorCode::config, "unknown policy axis '" + key + "'");
    }
    return p;
}

std::size_t PrecisionPlan::count(LayerKind kind, Precision p) const {
    return static_cast<std::size_t>(std::count_if(per_layer.begin(), per_layer.end(),
                                                  [&](const LayerPlan& l) { return l.kind == kind && l.weights == p; }));
}

std::size_t PrecisionPlan::count(Precision p) const {
    return static_cast<std::size_t>(
        std::count_if(per_layer.begin(), per_layer.end(), [&](const LayerPlan& l) { return l.weights == p; }));
}

LayerPattern PrecisionPlan::pattern() const {
    LayerPattern p;
    for (const auto& l : per_layer) p.layers.push_back(l.kind);
    return p;
}

PrecisionPlan plan(const LayerPattern& pattern, const QuantPolicy& policy) {
    pattern.validate();
    const auto& L = pattern.layers;
    PrecisionPlan out;
    out.kv_cache = policy.kv_cache;
    out.conv1d = Precision::bf16;

    std::vector<bool> feeds_attention(L.size(), false);
    for (std::size_t i = 0; i < L.size(); ++i) {
        if (L[i] != LayerKind::attention) continue;
        if (i == 0) {
            out.warnings.push_back("attention layer 0 has no preceding layer");
        } else if (L[i - 1] != LayerKind::mamba) {
            out.warnings.push_back("attention layer " + std::to_string(i) + " is preceded by a " +
                                   to_string(L[i - 1]) + " layer, no mamba predecessor kept");
        } else {
            feeds_attention[i - 1] = true;
        }
    }

    for (std::size_t i = 0; i < L.size(); ++i) {
        LayerPlan lp{L[i], Precision::fp8, ""};
        switch (L[i]) {
            case LayerKind::attention:
                lp.weights = policy.attention;
                lp.note = "self-attention";
                break;
            case LayerKind::moe:
                lp.weights = policy.moe;
                lp.note = "moe";
                break;
            case LayerKind::mamba:
                if (policy.mamba == MambaMode::bf16) {
                    lp.weights = Precision::bf16;
                    lp.note = "mamba";
                } else if (policy.mamba == MambaMode::mixed && feeds_attention[i]) {
                    lp.weights = Precision::bf16;
                    lp.note = "mamba feeding self-attention";
                } else {
                    lp.weights = Precision::fp8;
                    lp.note = feeds_attention[i] ? "mamba feeding self-attention" : "mamba";
                }
                break;
        }
        out.per_layer.push_back(std::move(lp));
    }
    return out;
}

ModelDims ModelDims::from_config(const KvConfig& cfg) {
    cfg.require_known({"model_dim", "vocab_size", "tied_embeddings", "q_heads", "kv_heads", "head_dim", "mamba_heads",
                       "mamba_head_dim", "mamba_state_dim", "mamba_groups", "conv_kernel", "n_experts", "expert_dim",
                       "n_shared_experts", "shared_expert_dim"});
    const auto need = [&](std::string_view key) {
        if (!cfg.has(key)) throw Error(ErrorCode::config, "missing dimension '" + std::string(key) + "'");
        return cfg.get_size(key, 0);
    };
    ModelDims d;
    d.model_dim = need("model_dim");
    d.vocab_size = need("vocab_size");
    d.tied_embeddings = cfg.get_bool("tied_embeddings", false);
    d.q_heads = need("q_heads");
    d.kv_heads = need("kv_heads");
    d.head_dim = need("head_dim");
    d.mamba_heads = need("mamba_heads");
    d.mamba_head_dim = need("mamba_head_dim");
    d.mamba_state_dim = need("mamba_state_dim");
    d.mamba_groups = need("mamba_groups");
    d.conv_kernel = need("conv_kernel");
    d.n_experts = need("n_experts");
    d.expert_dim = need("expert_dim");
    d.n_shared_experts = need("n_shared_experts");
    d.shared_expert_dim = cfg.has("shared_expert_dim") ? cfg.get_size("shared_expert_dim", 0) : d.expert_dim;
    d.validate();
    return d;
}

ModelDims ModelDims::nano_defaults() {
    ModelDims d;
    d.model_dim = 2688;
    d.vocab_size = 131072;
    d.q_heads = 32;
    d.kv_heads = 2;
    d.head_dim = 128;
    d.mamba_heads = 64;
    d.mamba_head_dim = 64;
    d.mamba_state_dim = 128;
    d.mamba_groups = 8;
    d.conv_kernel = 4;
    d.n_experts = 128;
    d.expert_dim = 1856;
    d.n_shared_experts = 2;
    d.shared_expert_dim = 1856;
    return d;
}

void ModelDims::validate() const {
    if (model_dim == 0 || vocab_size == 0 || q_heads == 0 || kv_heads == 0 || head_dim == 0 || mamba_heads == 0 ||
        mamba_head_dim == 0 || mamba_state_dim == 0 || mamba_groups == 0 || conv_kernel == 0 || n_experts == 0 ||
        expert_dim == 0)
        throw Error(ErrorCode::config, "model dimensions must be positive");
}

LayerParams layer_params(LayerKind kind, const ModelDims& d) {
    using u64 = std::uint64_t;
    const u64 D = d.model_dim;
    LayerParams p;
    switch (kind) {
        case LayerKind::attention: {
            const u64 q = u64{d.q_heads} * d.head_dim, kv = u64{d.kv_heads} * d.head_dim;
            p.weights = D * q + 2 * D * kv + q * D + D;  // q, k, v, o, pre-norm
            break;
        }
        case LayerKind::mamba: {
            const u64 inner = u64{d.mamba_heads} * d.mamba_head_dim;
            const u64 bc = 2 * u64{d.mamba_groups} * d.mamba_state_dim;
            const u64 conv_ch = inner + bc;
            // in_proj -> [z, x, B, C, dt]; A_log, D, dt_bias; gated norm; out_proj; pre-norm
            p.weights = D * (2 * inner + bc + d.mamba_heads) + 3 * u64{d.mamba_heads} + inner + inner * D + D;
            p.conv1d = conv_ch * d.conv_kernel + conv_ch;
            break;
        }
        case LayerKind::moe: {
            const u64 routed = u64{d.n_experts} * 2 * D * d.expert_dim;
            const u64 shared = u64{d.n_shared_experts} * 2 * D * d.shared_expert_dim;
            p.weights = routed + shared + u64{d.n_experts} * D + d.n_experts + D;  // + router, bias, pre-norm
            break;
        }
    }
    return p;
}

std::uint64_t embedding_params(const ModelDims& d) {
    const std::uint64_t table = std::uint64_t{d.vocab_size} * d.model_dim;
    return (d.tied_embeddings ? table : 2 * table) + d.model_dim;  // + final norm
}

std::uint64_t total_params(const LayerPattern& pattern, const ModelDims& dims) {
    dims.validate();
    std::uint64_t total = embedding_params(dims);
    for (auto k : pattern.layers) {
        const auto p = layer_params(k, dims);
        total += p.weights + p.conv1d;
    }
    return total;
}

MemoryEstimate memory_estimate(const LayerPattern& pattern, const PrecisionPlan& plan, const ModelDims& dims) {
    pattern.validate();
    dims.validate();
    if (plan.per_layer.size() != pattern.layers.size())
        throw Error(ErrorCode::shape, "plan has " + std::to_string(plan.per_layer.size()) + " layers, pattern has " +
                                          std::to_string(pattern.layers.size()));
    MemoryEstimate m;
    for (const char* k : {"attention", "mamba", "moe", "conv1d", "embeddings"}) m.bytes[k] = 0;
    std::size_t attention_layers = 0;
    for (std::size_t i = 0; i < pattern.layers.size(); ++i) {
        const auto kind = pattern.layers[i];
        if (plan.per_layer[i].kind != kind) throw Error(ErrorCode::shape, "plan does not match pattern at layer " + std::to_string(i));
        const auto p = layer_params(kind, dims);
        m.bytes[to_string(kind)] += p.weights * bytes_per_element(plan.per_layer[i].weights);
        m.bytes["conv1d"] += p.conv1d * bytes_per_element(plan.conv1d);
        m.total_params += p.weights + p.conv1d;
        if (kind == LayerKind::attention) ++attention_layers;
    }
    const auto emb = embedding_params(dims);
    m.bytes["embeddings"] = emb * bytes_per_element(Precision::bf16);
    m.total_params += emb;
    m.layer_weight_bytes = m.bytes["attention"] + m.bytes["mamba"] + m.bytes["moe"];
    for (const auto& [k, v] : m.bytes) m.total_bytes += v;
    m.kv_cache_bytes_per_token =
        std::uint64_t{attention_layers} * 2 * dims.kv_heads * dims.head_dim * bytes_per_element(plan.kv_cache);
    return m;
}

}  // namespace ptkit::quant
