#pragma once
/// @file model_config.hpp
/// Architecture hyperparameters shared by the model builder, checkpoints,
/// and the CLI config file.

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hinet/common.hpp"

namespace hinet {

/// Network variants compared in the ablation study.
/// - hybrid: modality-specific encoders/decoders, MFB fusion, MFB generator.
/// - early_fusion: both inputs channel-concatenated into one encoder.
/// - late_fusion: latents concatenated once before the generator.
/// - concate_d1: concatenation blocks in both fusion network and generator.
/// - concate_d2: MFB fusion network, concatenation generator blocks.
/// - concate_d3: concatenation fusion network, MFB generator blocks.
enum class FusionVariant { Hybrid, EarlyFusion, LateFusion, ConcatD1, ConcatD2, ConcatD3 };

std::string variant_name(FusionVariant v);
FusionVariant variant_from_name(const std::string& name);

/// True when modality-specific autoencoders (and the reconstruction loss)
/// are part of the variant.
bool variant_has_decoders(FusionVariant v);
/// True when the fusion-network blocks are MFB (vs plain concatenation).
bool variant_fusion_mfb(FusionVariant v);
/// True when the generator decoder blocks are MFB.
bool variant_generator_mfb(FusionVariant v);

struct ModelConfig {
    int input_rows = 128;
    int input_cols = 128;
    std::vector<int> encoder_channels = {32, 64, 128};
    /// (conv1, conv2) widths of the fusion-network blocks, shallow to deep.
    std::vector<std::pair<int, int>> fusion_filters = {{32, 64}, {64, 128}, {128, 128}};
    /// (conv1, conv2) widths of the generator decoder blocks, deep to shallow.
    std::vector<std::pair<int, int>> generator_filters = {{128, 128}, {64, 64}, {32, 32}};
    std::vector<int> generator_head_channels = {256, 128};
    std::vector<int> generator_tail_channels = {32, 1};
    std::vector<int> discriminator_channels = {32, 64, 128, 256, 1};
    std::vector<int> decoder_channels = {64, 32, 32};
    double leaky_slope = 0.2;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;
    FusionVariant fusion_variant = FusionVariant::Hybrid;

    int stages() const { return static_cast<int>(encoder_channels.size()); }
    int latent_channels() const { return encoder_channels.back(); }

    /// Throws ConfigError on inconsistent settings.
    void validate() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace hinet
