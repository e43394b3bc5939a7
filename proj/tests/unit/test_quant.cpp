// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "ptkit/error.hpp"
#include "ptkit/quant.hpp"

using namespace ptkit;
using namespace ptkit::quant;

TEST_CASE("selective plan marks attention and its mamba predecessor") {
    LayerPattern p{{LayerKind::mamba, LayerKind::mamba, LayerKind::attention, LayerKind::moe}};
    auto pl = plan(p, QuantPolicy::selective());
    CHECK(pl.per_layer[0].weights == Precision::fp8);
    CHECK(pl.per_layer[1].weights == Precision::bf16);
    CHECK(pl.per_layer[2].weights == Precision::bf16);
    CHECK(pl.per_layer[3].weights == Precision::fp8);
    CHECK(pl.kv_cache == Precision::fp8);
    CHECK(pl.conv1d == Precision::bf16);
    CHECK(pl.warnings.empty());
    CHECK(plan(pl.pattern(), QuantPolicy::selective()).per_layer.size() == 4);
}

TEST_CASE("predecessor scan oracle on random patterns") {
    const char kinds[] = {'M', 'E', '*'};
    std::uint64_t x = 77;
    for (int t = 0; t < 200; ++t) {
        std::string code;
        for (int i = 0; i < 30; ++i) {
            x = x * 6364136223846793005ULL + 1442695040888963407ULL;
            code += kinds[(x >> 33) % 3];
        }
        auto pat = LayerPattern::from_compact(code);
        auto pl = plan(pat, QuantPolicy::selective());
        for (std::size_t i = 0; i < code.size(); ++i) {
            bool expect = code[i] == '*' || (code[i] == 'M' && i + 1 < code.size() && code[i + 1] == '*');
            CHECK((pl.per_layer[i].weights == Precision::bf16) == expect);
        }
        // idempotent: planning the plan's own pattern gives the same plan
        auto again = plan(pl.pattern(), QuantPolicy::selective());
        for (std::size_t i = 0; i < code.size(); ++i) CHECK(again.per_layer[i].weights == pl.per_layer[i].weights);
    }
}

TEST_CASE("uniform policies") {
    auto pat = LayerPattern::from_compact("ME*ME");
    auto b = plan(pat, QuantPolicy::all_bf16());
    CHECK(b.count(Precision::bf16) == 5);
    CHECK(b.kv_cache == Precision::bf16);
    auto f = plan(pat, QuantPolicy::all_fp8());
    CHECK(f.count(Precision::fp8) == 5);
    CHECK(f.kv_cache == Precision::fp8);
}

TEST_CASE("attention without a mamba predecessor warns") {
    auto pl = plan(LayerPattern::from_compact("*E*"), QuantPolicy::selective());
    CHECK(pl.warnings.size() == 2);
}

TEST_CASE("memory ratios") {
    auto pat = LayerPattern::from_compact("MEM*EMEM*E");
    auto dims = ModelDims::nano_defaults();
    auto bf = memory_estimate(pat, plan(pat, QuantPolicy::all_bf16()), dims);
    auto f8 = memory_estimate(pat, plan(pat, QuantPolicy::all_fp8()), dims);
    auto sel = memory_estimate(pat, plan(pat, QuantPolicy::selective()), dims);
    CHECK(bf.layer_weight_bytes == 2 * f8.layer_weight_bytes);
    CHECK(sel.layer_weight_bytes > f8.layer_weight_bytes);
    CHECK(sel.layer_weight_bytes < bf.layer_weight_bytes);
    CHECK(sel.total_bytes > f8.total_bytes);
    CHECK(sel.total_bytes < bf.total_bytes);
    CHECK(bf.kv_cache_bytes_per_token == 2 * f8.kv_cache_bytes_per_token);
    CHECK(bf.total_params == total_params(pat, dims));
}

TEST_CASE("pattern parsing") {
    auto p = LayerPattern::parse("# header\nmamba\n\nattention\nmoe\n");
    CHECK(p.layers.size() == 3);
    CHECK(p.count(LayerKind::attention) == 1);
    try {
        LayerPattern::parse("mamba\nlinear\n");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(LayerPattern::parse("").validate(), Error);
    CHECK_THROWS_AS(LayerPattern::from_compact("MX"), Error);
}

TEST_CASE("dims from config") {
    CHECK_THROWS_AS(ModelDims::from_config(KvConfig::parse("model_dim = 10\n")), Error);
    auto q = QuantPolicy::parse("attention=fp8,kv=bf16");
    CHECK(q.attention == Precision::fp8);
    CHECK(q.kv_cache == Precision::bf16);
    CHECK(q.mamba == MambaMode::mixed);
    CHECK_THROWS_AS(QuantPolicy::parse("attention=int4"), Error);
}
