#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "hinet/model.hpp"
#include "hinet/variants.hpp"
#include "test_support.hpp"

using namespace hinet;
using hinet::testing::max_abs_diff;
using hinet::testing::random_tensor;

namespace {

std::vector<int> shape_of(const NodeRef& n) { return n->value.shape(); }

ModelConfig small_config(FusionVariant v) {
    ModelConfig c;
    c.input_rows = c.input_cols = 32;
    c.fusion_variant = v;
    return c;
}

}  // namespace

TEST_CASE("feature ladder and output shapes hold for every variant") {
    RandomSource data_rng(1);
    const int n = 2;
    for (const auto& spec : all_variants()) {
        CAPTURE(spec.name);
        ModelConfig cfg;  // full 128x128 ladder
        cfg.fusion_variant = spec.kind;
        HiNetModel model(cfg, 5);
        Graph g(false, false);
        auto x1 = g.leaf(random_tensor({n, 1, 128, 128}, data_rng, 0.5));
        auto x2 = g.leaf(random_tensor({n, 1, 128, 128}, data_rng, 0.5));
        auto gen = model.generator_forward(g, x1, x2);

        REQUIRE(gen.p1.pooled.size() == 3);
        CHECK(shape_of(gen.p1.pooled[0]) == std::vector<int>{n, 32, 64, 64});
        CHECK(shape_of(gen.p1.pooled[1]) == std::vector<int>{n, 64, 32, 32});
        CHECK(shape_of(gen.p1.pooled[2]) == std::vector<int>{n, 128, 16, 16});
        CHECK(shape_of(gen.p1.pre_pool[0]) == std::vector<int>{n, 32, 128, 128});
        CHECK(shape_of(gen.p1.pre_pool[2]) == std::vector<int>{n, 128, 32, 32});
        if (spec.kind == FusionVariant::EarlyFusion) {
            CHECK(gen.p2.pooled.empty());
        } else {
            REQUIRE(gen.p2.pooled.size() == 3);
            CHECK(shape_of(gen.p2.pooled[2]) == std::vector<int>{n, 128, 16, 16});
        }
        CHECK(shape_of(gen.fused) == std::vector<int>{n, 128, 16, 16});
        CHECK(shape_of(gen.yhat) == std::vector<int>{n, 1, 128, 128});

        auto dmap = model.discriminator_forward(g, x1, x2, gen.yhat);
        CHECK(shape_of(dmap) == std::vector<int>{n, 1, 8, 8});

        if (model.has_decoders()) {
            auto r1 = model.decoder_forward(g, gen.p1.pooled.back(), 0);
            auto r2 = model.decoder_forward(g, gen.p2.pooled.back(), 1);
            CHECK(shape_of(r1) == std::vector<int>{n, 1, 128, 128});
            CHECK(shape_of(r2) == std::vector<int>{n, 1, 128, 128});
        }
    }
}

TEST_CASE("outputs are bounded by their final squash") {
    RandomSource rng(2);
    HiNetModel model(small_config(FusionVariant::Hybrid), 3);
    Graph g(false, false);
    auto x1 = g.leaf(random_tensor({2, 1, 32, 32}, rng));
    auto x2 = g.leaf(random_tensor({2, 1, 32, 32}, rng));
    auto gen = model.generator_forward(g, x1, x2);
    auto dmap = model.discriminator_forward(g, x1, x2, gen.yhat);
    for (int64_t i = 0; i < gen.yhat->value.size(); ++i) {
        CHECK(gen.yhat->value[i] <= 1.0f);
        CHECK(gen.yhat->value[i] >= -1.0f);
    }
    for (int64_t i = 0; i < dmap->value.size(); ++i) {
        CHECK(dmap->value[i] < 1.0f);
        CHECK(dmap->value[i] > 0.0f);
    }
}

TEST_CASE("fusion is symmetric in its two streams bit for bit") {
    // the fused sum/product/max maps cannot tell the streams apart
    for (uint64_t draw = 0; draw < 20; ++draw) {
        RandomSource rng(100 + draw);
        ParamStore store;
        RandomSource init(7 + draw);
        ModelConfig cfg = small_config(FusionVariant::Hybrid);
        MfbBlock block(store, "t.", 8, 4, 8, 8, PrevAlign::PoolDown, cfg, init);
        Graph g(false, false);
        auto s1 = g.leaf(random_tensor({2, 8, 8, 8}, rng));
        auto s2 = g.leaf(random_tensor({2, 8, 8, 8}, rng));
        auto prev = g.leaf(random_tensor({2, 4, 16, 16}, rng));
        auto a = block.forward(g, s1, s2, prev);
        auto b = block.forward(g, s2, s1, prev);
        CHECK(max_abs_diff(a->value, b->value) == 0.0);
    }
}

TEST_CASE("whole fusion network is symmetric across pyramids") {
    RandomSource rng(4);
    HiNetModel model(small_config(FusionVariant::Hybrid), 9);
    Graph g(false, false);
    auto x1 = g.leaf(random_tensor({1, 1, 32, 32}, rng));
    auto x2 = g.leaf(random_tensor({1, 1, 32, 32}, rng));
    auto p1 = model.encoder_forward(g, x1, 0);
    auto p2 = model.encoder_forward(g, x2, 1);
    auto fwd = model.fusion_forward(g, p1, &p2);
    auto swapped = model.fusion_forward(g, p2, &p1);
    CHECK(max_abs_diff(fwd->value, swapped->value) == 0.0);
}

TEST_CASE("variants declare distinct parameter inventories") {
    std::vector<std::set<std::string>> inventories;
    for (const auto& spec : all_variants()) {
        HiNetModel model(small_config(spec.kind), 1);
        auto names = model.params().param_names();
        inventories.emplace_back(names.begin(), names.end());
    }
    for (size_t i = 0; i < inventories.size(); ++i)
        for (size_t j = i + 1; j < inventories.size(); ++j) {
            CAPTURE(all_variants()[i].name);
            CAPTURE(all_variants()[j].name);
            CHECK(inventories[i] != inventories[j]);
        }
}

TEST_CASE("variant structure flags match their parameter names") {
    for (const auto& spec : all_variants()) {
        CAPTURE(spec.name);
        HiNetModel model(small_config(spec.kind), 1);
        const auto names = model.params().param_names();
        auto any_with = [&](const std::string& prefix) {
            return std::any_of(names.begin(), names.end(), [&](const std::string& n) {
                return n.rfind(prefix, 0) == 0;
            });
        };
        CHECK(any_with("disc.") == true);
        CHECK(any_with("dec") == variant_has_decoders(spec.kind));
        if (spec.kind == FusionVariant::EarlyFusion) {
            CHECK(any_with("enc."));
            CHECK(!any_with("enc1."));
        } else {
            CHECK(any_with("enc1."));
            CHECK(any_with("enc2."));
        }
    }
}

TEST_CASE("initialization is seed-deterministic and seed-sensitive") {
    ModelConfig cfg = small_config(FusionVariant::Hybrid);
    HiNetModel a(cfg, 21), b(cfg, 21), c(cfg, 22);
    const auto names = a.params().param_names();
    bool all_equal = true, any_diff = false;
    for (const auto& n : names) {
        const Tensor& ta = a.params().find_param(n)->value;
        const Tensor& tb = b.params().find_param(n)->value;
        const Tensor& tc = c.params().find_param(n)->value;
        if (max_abs_diff(ta, tb) != 0.0) all_equal = false;
        if (max_abs_diff(ta, tc) != 0.0) any_diff = true;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("model construction rejects bad configurations") {
    ModelConfig cfg = small_config(FusionVariant::Hybrid);
    cfg.input_rows = 20;  // not divisible by 2^stages after three halvings? 20/8 not integral
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    ModelConfig cfg2 = small_config(FusionVariant::Hybrid);
    cfg2.encoder_channels = {32, 64};  // stage count must match fusion filters
    CHECK_THROWS_AS(cfg2.validate(), ConfigError);

    ModelConfig cfg3 = small_config(FusionVariant::Hybrid);
    cfg3.input_rows = 0;
    CHECK_THROWS_AS(cfg3.validate(), ConfigError);
}

TEST_CASE("forward pass rejects inputs at the wrong resolution") {
    RandomSource rng(6);
    HiNetModel model(small_config(FusionVariant::Hybrid), 3);
    Graph g(false, false);
    auto ok = g.leaf(random_tensor({1, 1, 32, 32}, rng));
    auto bad = g.leaf(random_tensor({1, 1, 16, 16}, rng));
    CHECK_THROWS_AS(model.generator_forward(g, ok, bad), DimensionError);
}

TEST_CASE("variant names round-trip and the registry lists six") {
    const auto& vs = all_variants();
    REQUIRE(vs.size() == 6);
    CHECK(vs.front().name == "hybrid");
    std::set<std::string> names;
    for (const auto& v : vs) {
        names.insert(v.name);
        CHECK(variant_name(v.kind) == v.name);
        CHECK(variant_from_name(v.name) == v.kind);
    }
    CHECK(names.size() == 6);
    CHECK_THROWS_AS(variant_from_name("nonsense"), ConfigError);
}
