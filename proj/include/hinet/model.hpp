#pragma once
/// @file model.hpp
/// The hybrid-fusion synthesis network: modality-specific autoencoders, a
/// fusion network producing a shared latent, a generator decoding the latent
/// back to image space, and a conditional discriminator.

#include <memory>
#include <optional>
#include <vector>

#include "hinet/model_config.hpp"
#include "hinet/nn.hpp"

namespace hinet {

/// Per-stage encoder features: pre_pool[k] at full stage resolution (the
/// generator's skip inputs), pooled[k] after 2x2 max-pooling (the fusion
/// network's inputs).  pooled.back() is the latent.
struct FeaturePyramid {
    std::vector<NodeRef> pre_pool;
    std::vector<NodeRef> pooled;
    const NodeRef& latent() const { return pooled.back(); }
};

struct EncoderNet {
    std::vector<Conv2d> convs;
    std::vector<BatchNorm2d> bns;
    double slope = 0.2;

    EncoderNet() = default;
    EncoderNet(ParamStore& store, const std::string& prefix, int in_ch, const ModelConfig& cfg,
               RandomSource& rng);
    FeaturePyramid forward(Graph& g, const NodeRef& x) const;
};

struct DecoderNet {
    std::vector<Conv2d> convs;
    std::vector<BatchNorm2d> bns;
    Conv2d out_conv;

    DecoderNet() = default;
    DecoderNet(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
               RandomSource& rng);
    NodeRef forward(Graph& g, const NodeRef& latent) const;
};

/// How a block's previous-output feature is brought to the block resolution.
enum class PrevAlign { PoolDown, UpSample };

/// Modality fusion block: combines two same-shape streams through their sum,
/// product, and elementwise max, then two conv+norm+relu stages; the second
/// stage also sees the resolution-aligned previous block output when present.
struct MfbBlock {
    Conv2d conv1, conv2;
    BatchNorm2d bn1, bn2;
    PrevAlign align = PrevAlign::PoolDown;
    bool has_prev = false;

    MfbBlock() = default;
    MfbBlock(ParamStore& store, const std::string& prefix, int s_ch, int prev_ch, int c1, int c2,
             PrevAlign align, const ModelConfig& cfg, RandomSource& rng);
    NodeRef forward(Graph& g, const NodeRef& s1, const NodeRef& s2, const NodeRef& f_prev) const;
};

/// Degraded fusion block: plain channel concatenation of the streams (and the
/// aligned previous output) followed by one conv+norm+relu.  Its conv width
/// matches the MFB second-conv width at the same stage.
struct ConcatBlock {
    Conv2d conv;
    BatchNorm2d bn;
    PrevAlign align = PrevAlign::PoolDown;
    bool has_prev = false;

    ConcatBlock() = default;
    ConcatBlock(ParamStore& store, const std::string& prefix, int in_ch, int prev_ch, int out_ch,
                PrevAlign align, const ModelConfig& cfg, RandomSource& rng);
    NodeRef forward(Graph& g, const std::vector<NodeRef>& streams, const NodeRef& f_prev) const;
};

struct Discriminator {
    std::vector<Conv2d> convs;
    std::vector<BatchNorm2d> bns;
    double slope = 0.2;

    Discriminator() = default;
    Discriminator(ParamStore& store, const std::string& prefix, const ModelConfig& cfg,
                  RandomSource& rng);
    /// Conditional score map in (0, 1): input is concat(x1, x2, candidate).
    NodeRef forward(Graph& g, const NodeRef& x1, const NodeRef& x2, const NodeRef& t) const;
};

class HiNetModel {
public:
    HiNetModel(ModelConfig cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    bool has_decoders() const { return variant_has_decoders(cfg_.fusion_variant); }

    /// which selects the modality-specific encoder (0 or 1); the early-fusion
    /// variant has a single joint encoder and expects which == 0.
    FeaturePyramid encoder_forward(Graph& g, const NodeRef& x, int which) const;
    NodeRef decoder_forward(Graph& g, const NodeRef& latent, int which) const;

    /// Fused latent from the two pyramids (p2 null for early fusion).
    NodeRef fusion_forward(Graph& g, const FeaturePyramid& p1, const FeaturePyramid* p2) const;

    struct GenResult {
        NodeRef yhat;
        FeaturePyramid p1, p2;  // p2 empty for early fusion
        NodeRef fused;
    };
    /// Full synthesis pass: encode, fuse, decode to the target modality.
    GenResult generator_forward(Graph& g, const NodeRef& x1, const NodeRef& x2) const;

    NodeRef discriminator_forward(Graph& g, const NodeRef& x1, const NodeRef& x2,
                                  const NodeRef& t) const;

private:
    NodeRef generator_decode(Graph& g, const NodeRef& fused,
                             const std::vector<std::vector<NodeRef>>& skips) const;

    ModelConfig cfg_;
    ParamStore store_;
    EncoderNet enc1_, enc2_;
    DecoderNet dec1_, dec2_;
    std::vector<MfbBlock> fusion_mfb_;
    std::vector<ConcatBlock> fusion_cat_;
    Conv2d late_conv_;
    BatchNorm2d late_bn_;
    Conv2d head1_, head2_;
    BatchNorm2d head_bn1_, head_bn2_;
    std::vector<MfbBlock> gen_mfb_;
    std::vector<ConcatBlock> gen_cat_;
    Conv2d tail1_, tail2_;
    BatchNorm2d tail_bn_;
    Discriminator disc_;
};

}  // namespace hinet
