#include "hinet/model.hpp"

namespace hinet {

namespace {
void check_image_input(const NodeRef& x, const ModelConfig& cfg, const char* what) {
    const auto& s = x->value.shape();
    HINET_CHECK(s.size() == 4 && s[1] == 1 && s[2] == cfg.input_rows && s[3] == cfg.input_cols,
                DimensionError, what, " must be (n, 1, ", cfg.input_rows, ", ", cfg.input_cols,
                "), got ", x->value.shape_str());
}
}  // namespace

EncoderNet::EncoderNet(ParamStore& store, const std::string& prefix, int in_ch,
                       const ModelConfig& cfg, RandomSource& rng)
    : slope(cfg.leaky_slope) {
    int c = in_ch;
    for (int k = 0; k < cfg.stages(); ++k) {
        const std::string sp = prefix + ".s" + std::to_string(k + 1);
        convs.emplace_back(store, sp + ".conv", c, cfg.encoder_channels[k], 1, rng);
        bns.emplace_back(store, sp + ".norm", cfg.encoder_channels[k], cfg.bn_momentum,
                         cfg.bn_eps);
        c = cfg.encoder_channels[k];
    }
}

FeaturePyramid EncoderNet::forward(Graph& g, const NodeRef& x) const {
    FeaturePyramid p;
    NodeRef h = x;
    for (size_t k = 0; k < convs.size(); ++k) {
        h = leaky_relu(g, bns[k].forward(g, convs[k].forward(g, h)), slope);
        p.pre_pool.push_back(h);
        h = maxpool2x2(g, h);
        p.pooled.push_back(h);
    }
    return p;
}

DecoderNet::DecoderNet(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                       RandomSource& rng) {
    int c = cfg.latent_channels();
    for (int k = 0; k < cfg.stages(); ++k) {
        const std::string sp = prefix + ".s" + std::to_string(k + 1);
        convs.emplace_back(store, sp + ".conv", c, cfg.decoder_channels[k], 1, rng);
        bns.emplace_back(store, sp + ".norm", cfg.decoder_channels[k], cfg.bn_momentum,
                         cfg.bn_eps);
        c = cfg.decoder_channels[k];
    }
    out_conv = Conv2d(store, prefix + ".out", c, 1, 1, rng);
}

NodeRef DecoderNet::forward(Graph& g, const NodeRef& latent) const {
    NodeRef h = latent;
    for (size_t k = 0; k < convs.size(); ++k) {
        h = upsample2x_nearest(g, h);
        h = relu(g, bns[k].forward(g, convs[k].forward(g, h)));
    }
    return tanh_act(g, out_conv.forward(g, h));
}

MfbBlock::MfbBlock(ParamStore& store, const std::string& prefix, int s_ch, int prev_ch, int c1,
                   int c2, PrevAlign align, const ModelConfig& cfg, RandomSource& rng)
    : align(align), has_prev(prev_ch > 0) {
    conv1 = Conv2d(store, prefix + ".conv1", 3 * s_ch, c1, 1, rng);
    bn1 = BatchNorm2d(store, prefix + ".norm1", c1, cfg.bn_momentum, cfg.bn_eps);
    conv2 = Conv2d(store, prefix + ".conv2", c1 + prev_ch, c2, 1, rng);
    bn2 = BatchNorm2d(store, prefix + ".norm2", c2, cfg.bn_momentum, cfg.bn_eps);
}

NodeRef MfbBlock::forward(Graph& g, const NodeRef& s1, const NodeRef& s2,
                          const NodeRef& f_prev) const {
    check_same_shape(s1->value, s2->value, "mfb streams");
    NodeRef combined = concat_channels(
        g, {add(g, s1, s2), mul(g, s1, s2), maximum(g, s1, s2)});
    NodeRef h = relu(g, bn1.forward(g, conv1.forward(g, combined)));
    if (has_prev) {
        HINET_CHECK(f_prev != nullptr, DimensionError,
                    "mfb block expects a previous-output feature");
        NodeRef aligned = align == PrevAlign::PoolDown ? maxpool2x2(g, f_prev)
                                                       : upsample2x_nearest(g, f_prev);
        h = concat_channels(g, {h, aligned});
    } else {
        HINET_CHECK(f_prev == nullptr, DimensionError,
                    "first mfb block takes no previous-output feature");
    }
    return relu(g, bn2.forward(g, conv2.forward(g, h)));
}

ConcatBlock::ConcatBlock(ParamStore& store, const std::string& prefix, int in_ch, int prev_ch,
                         int out_ch, PrevAlign align, const ModelConfig& cfg, RandomSource& rng)
    : align(align), has_prev(prev_ch > 0) {
    conv = Conv2d(store, prefix + ".conv", in_ch + prev_ch, out_ch, 1, rng);
    bn = BatchNorm2d(store, prefix + ".norm", out_ch, cfg.bn_momentum, cfg.bn_eps);
}

NodeRef ConcatBlock::forward(Graph& g, const std::vector<NodeRef>& streams,
                             const NodeRef& f_prev) const {
    std::vector<NodeRef> parts = streams;
    if (has_prev) {
        HINET_CHECK(f_prev != nullptr, DimensionError,
                    "concat block expects a previous-output feature");
        parts.push_back(align == PrevAlign::PoolDown ? maxpool2x2(g, f_prev)
                                                     : upsample2x_nearest(g, f_prev));
    }
    return relu(g, bn.forward(g, conv.forward(g, concat_channels(g, parts))));
}

Discriminator::Discriminator(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                             RandomSource& rng)
    : slope(cfg.leaky_slope) {
    int c = 3;
    for (int k = 0; k < 5; ++k) {
        const int out = cfg.discriminator_channels[k];
        const int stride = k < 4 ? 2 : 1;
        convs.emplace_back(store, prefix + ".conv" + std::to_string(k + 1), c, out, stride, rng);
        if (k < 4)
            bns.emplace_back(store, prefix + ".norm" + std::to_string(k + 1), out,
                             cfg.bn_momentum, cfg.bn_eps);
        c = out;
    }
}

NodeRef Discriminator::forward(Graph& g, const NodeRef& x1, const NodeRef& x2,
                               const NodeRef& t) const {
    check_same_shape(x1->value, x2->value, "discriminator inputs");
    check_same_shape(x1->value, t->value, "discriminator candidate");
    NodeRef h = concat_channels(g, {x1, x2, t});
    for (size_t k = 0; k < 4; ++k)
        h = leaky_relu(g, bns[k].forward(g, convs[k].forward(g, h)), slope);
    return sigmoid(g, convs[4].forward(g, h));
}

HiNetModel::HiNetModel(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    RandomSource rng(seed);
    const FusionVariant v = cfg_.fusion_variant;
    const int stages = cfg_.stages();

    if (v == FusionVariant::EarlyFusion) {
        enc1_ = EncoderNet(store_, "enc", 2, cfg_, rng);
    } else {
        enc1_ = EncoderNet(store_, "enc1", 1, cfg_, rng);
        enc2_ = EncoderNet(store_, "enc2", 1, cfg_, rng);
    }
    if (variant_has_decoders(v)) {
        dec1_ = DecoderNet(store_, "dec1", cfg_, rng);
        dec2_ = DecoderNet(store_, "dec2", cfg_, rng);
    }

    if (v == FusionVariant::LateFusion) {
        late_conv_ = Conv2d(store_, "fusion.late.conv", 2 * cfg_.latent_channels(),
                            cfg_.latent_channels(), 1, rng);
        late_bn_ = BatchNorm2d(store_, "fusion.late.norm", cfg_.latent_channels(),
                               cfg_.bn_momentum, cfg_.bn_eps);
    } else if (v != FusionVariant::EarlyFusion) {
        for (int k = 0; k < stages; ++k) {
            const int s_ch = cfg_.encoder_channels[k];
            const int prev = k == 0 ? 0 : cfg_.fusion_filters[k - 1].second;
            const auto [c1, c2] = cfg_.fusion_filters[k];
            const std::string name = "fusion." + std::string(variant_fusion_mfb(v) ? "mfb" : "cat") +
                                     std::to_string(k + 1);
            if (variant_fusion_mfb(v))
                fusion_mfb_.emplace_back(store_, name, s_ch, prev, c1, c2, PrevAlign::PoolDown,
                                         cfg_, rng);
            else
                fusion_cat_.emplace_back(store_, name, 2 * s_ch, prev, c2, PrevAlign::PoolDown,
                                         cfg_, rng);
        }
    }

    const int head_in = cfg_.latent_channels();
    head1_ = Conv2d(store_, "gen.head1.conv", head_in, cfg_.generator_head_channels[0], 1, rng);
    head_bn1_ = BatchNorm2d(store_, "gen.head1.norm", cfg_.generator_head_channels[0],
                            cfg_.bn_momentum, cfg_.bn_eps);
    head2_ = Conv2d(store_, "gen.head2.conv", cfg_.generator_head_channels[0],
                    cfg_.generator_head_channels[1], 1, rng);
    head_bn2_ = BatchNorm2d(store_, "gen.head2.norm", cfg_.generator_head_channels[1],
                            cfg_.bn_momentum, cfg_.bn_eps);

    const int n_streams = v == FusionVariant::EarlyFusion ? 1 : 2;
    for (int k = 0; k < stages; ++k) {
        const int stage = stages - 1 - k;
        const int s_ch = cfg_.encoder_channels[stage];
        const int prev =
            k == 0 ? cfg_.generator_head_channels[1] : cfg_.generator_filters[k - 1].second;
        const auto [c1, c2] = cfg_.generator_filters[k];
        const std::string name =
            "gen." + std::string(variant_generator_mfb(v) ? "mfb" : "cat") + std::to_string(k + 1);
        if (variant_generator_mfb(v))
            gen_mfb_.emplace_back(store_, name, s_ch, prev, c1, c2, PrevAlign::UpSample, cfg_,
                                  rng);
        else
            gen_cat_.emplace_back(store_, name, n_streams * s_ch, prev, c2, PrevAlign::UpSample,
                                  cfg_, rng);
    }

    tail1_ = Conv2d(store_, "gen.tail1.conv", cfg_.generator_filters.back().second,
                    cfg_.generator_tail_channels[0], 1, rng);
    tail_bn_ = BatchNorm2d(store_, "gen.tail1.norm", cfg_.generator_tail_channels[0],
                           cfg_.bn_momentum, cfg_.bn_eps);
    tail2_ = Conv2d(store_, "gen.tail2.conv", cfg_.generator_tail_channels[0], 1, 1, rng);

    disc_ = Discriminator(store_, "disc", cfg_, rng);
}

FeaturePyramid HiNetModel::encoder_forward(Graph& g, const NodeRef& x, int which) const {
    if (cfg_.fusion_variant == FusionVariant::EarlyFusion) {
        HINET_CHECK(which == 0, ConfigError, "early fusion has a single joint encoder");
        const auto& s = x->value.shape();
        HINET_CHECK(s.size() == 4 && s[1] == 2, DimensionError,
                    "joint encoder expects a 2-channel input, got ", x->value.shape_str());
        return enc1_.forward(g, x);
    }
    HINET_CHECK(which == 0 || which == 1, ConfigError, "encoder index must be 0 or 1");
    check_image_input(x, cfg_, "encoder input");
    return (which == 0 ? enc1_ : enc2_).forward(g, x);
}

NodeRef HiNetModel::decoder_forward(Graph& g, const NodeRef& latent, int which) const {
    HINET_CHECK(has_decoders(), ConfigError, "variant '", variant_name(cfg_.fusion_variant),
                "' has no reconstruction decoders");
    HINET_CHECK(which == 0 || which == 1, ConfigError, "decoder index must be 0 or 1");
    return (which == 0 ? dec1_ : dec2_).forward(g, latent);
}

NodeRef HiNetModel::fusion_forward(Graph& g, const FeaturePyramid& p1,
                                   const FeaturePyramid* p2) const {
    const FusionVariant v = cfg_.fusion_variant;
    if (v == FusionVariant::EarlyFusion) {
        HINET_CHECK(p2 == nullptr, ConfigError, "early fusion takes a single pyramid");
        return p1.latent();
    }
    HINET_CHECK(p2 != nullptr, DimensionError, "fusion needs both modality pyramids");
    if (v == FusionVariant::LateFusion) {
        NodeRef cat = concat_channels(g, {p1.latent(), p2->latent()});
        return relu(g, late_bn_.forward(g, late_conv_.forward(g, cat)));
    }
    NodeRef f;
    for (int k = 0; k < cfg_.stages(); ++k) {
        if (variant_fusion_mfb(v))
            f = fusion_mfb_[static_cast<size_t>(k)].forward(g, p1.pooled[static_cast<size_t>(k)],
                                                            p2->pooled[static_cast<size_t>(k)], f);
        else
            f = fusion_cat_[static_cast<size_t>(k)].forward(
                g,
                {p1.pooled[static_cast<size_t>(k)], p2->pooled[static_cast<size_t>(k)]}, f);
    }
    return f;
}

NodeRef HiNetModel::generator_decode(Graph& g, const NodeRef& fused,
                                     const std::vector<std::vector<NodeRef>>& skips) const {
    NodeRef h = relu(g, head_bn1_.forward(g, head1_.forward(g, fused)));
    h = relu(g, head_bn2_.forward(g, head2_.forward(g, h)));
    NodeRef f = h;
    for (int k = 0; k < cfg_.stages(); ++k) {
        const auto& s = skips[static_cast<size_t>(k)];
        if (variant_generator_mfb(cfg_.fusion_variant)) {
            HINET_CHECK(s.size() == 2, DimensionError, "mfb generator block expects two skips");
            f = gen_mfb_[static_cast<size_t>(k)].forward(g, s[0], s[1], f);
        } else {
            f = gen_cat_[static_cast<size_t>(k)].forward(g, s, f);
        }
    }
    NodeRef t = relu(g, tail_bn_.forward(g, tail1_.forward(g, f)));
    return tanh_act(g, tail2_.forward(g, t));
}

HiNetModel::GenResult HiNetModel::generator_forward(Graph& g, const NodeRef& x1,
                                                    const NodeRef& x2) const {
    check_image_input(x1, cfg_, "source 1");
    check_image_input(x2, cfg_, "source 2");
    GenResult r;
    const int stages = cfg_.stages();
    std::vector<std::vector<NodeRef>> skips(static_cast<size_t>(stages));
    if (cfg_.fusion_variant == FusionVariant::EarlyFusion) {
        NodeRef joint = concat_channels(g, {x1, x2});
        r.p1 = enc1_.forward(g, joint);
        r.fused = r.p1.latent();
        for (int k = 0; k < stages; ++k)
            skips[static_cast<size_t>(k)] = {r.p1.pre_pool[static_cast<size_t>(stages - 1 - k)]};
    } else {
        r.p1 = enc1_.forward(g, x1);
        r.p2 = enc2_.forward(g, x2);
        r.fused = fusion_forward(g, r.p1, &r.p2);
        for (int k = 0; k < stages; ++k)
            skips[static_cast<size_t>(k)] = {r.p1.pre_pool[static_cast<size_t>(stages - 1 - k)],
                                             r.p2.pre_pool[static_cast<size_t>(stages - 1 - k)]};
    }
    r.yhat = generator_decode(g, r.fused, skips);
    return r;
}

NodeRef HiNetModel::discriminator_forward(Graph& g, const NodeRef& x1, const NodeRef& x2,
                                          const NodeRef& t) const {
    return disc_.forward(g, x1, x2, t);
}

}  // namespace hinet
