#include "hinet/model_config.hpp"

namespace hinet {

namespace {
const std::vector<std::pair<FusionVariant, std::string>>& variant_table() {
    static const std::vector<std::pair<FusionVariant, std::string>> table = {
        {FusionVariant::Hybrid, "hybrid"},         {FusionVariant::EarlyFusion, "early_fusion"},
        {FusionVariant::LateFusion, "late_fusion"}, {FusionVariant::ConcatD1, "concate_d1"},
        {FusionVariant::ConcatD2, "concate_d2"},   {FusionVariant::ConcatD3, "concate_d3"},
    };
    return table;
}
}  // namespace

std::string variant_name(FusionVariant v) {
    for (const auto& [k, n] : variant_table())
        if (k == v) return n;
    fail<ConfigError>("unknown fusion variant enum value");
}

FusionVariant variant_from_name(const std::string& name) {
    for (const auto& [k, n] : variant_table())
        if (n == name) return k;
    fail<ConfigError>("unknown fusion variant: '", name,
                      "' (expected hybrid, early_fusion, late_fusion, concate_d1, concate_d2, "
                      "or concate_d3)");
}

bool variant_has_decoders(FusionVariant v) { return v != FusionVariant::EarlyFusion; }

bool variant_fusion_mfb(FusionVariant v) {
    return v == FusionVariant::Hybrid || v == FusionVariant::ConcatD2;
}

bool variant_generator_mfb(FusionVariant v) {
    return v == FusionVariant::Hybrid || v == FusionVariant::ConcatD3 ||
           v == FusionVariant::LateFusion;
}

void ModelConfig::validate() const {
    const int s = stages();
    HINET_CHECK(s >= 2, ConfigError, "need at least two encoder stages, got ", s);
    HINET_CHECK(static_cast<int>(fusion_filters.size()) == s, ConfigError,
                "fusion_filters must have one entry per encoder stage");
    HINET_CHECK(static_cast<int>(generator_filters.size()) == s, ConfigError,
                "generator_filters must have one entry per encoder stage");
    for (int c : encoder_channels)
        HINET_CHECK(c > 0, ConfigError, "encoder channel counts must be positive");
    const int div = 1 << s;
    HINET_CHECK(input_rows > 0 && input_cols > 0 && input_rows % div == 0 &&
                    input_cols % div == 0,
                ConfigError, "input size ", input_rows, "x", input_cols,
                " must be divisible by 2^stages = ", div);
    HINET_CHECK(generator_head_channels.size() == 2, ConfigError,
                "generator head takes exactly two conv widths");
    HINET_CHECK(generator_tail_channels.size() == 2 && generator_tail_channels[1] == 1,
                ConfigError, "generator tail must end in a single output channel");
    HINET_CHECK(discriminator_channels.size() == 5 && discriminator_channels[4] == 1,
                ConfigError, "discriminator needs five conv widths ending in 1");
    HINET_CHECK(static_cast<int>(decoder_channels.size()) == s, ConfigError,
                "decoder_channels must have one entry per stage");
    HINET_CHECK(leaky_slope > 0.0 && leaky_slope < 1.0, ConfigError,
                "leaky_slope must lie in (0, 1), got ", leaky_slope);
    HINET_CHECK(bn_eps > 0.0, ConfigError, "bn_eps must be positive");
    HINET_CHECK(bn_momentum > 0.0 && bn_momentum < 1.0, ConfigError,
                "bn_momentum must lie in (0, 1)");
    // The discriminator halves resolution four times.
    HINET_CHECK(input_rows % 16 == 0 && input_cols % 16 == 0, ConfigError,
                "input size must be divisible by 16 for the discriminator");
}

namespace {
nlohmann::json pairs_to_json(const std::vector<std::pair<int, int>>& v) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [a, b] : v) j.push_back({a, b});
    return j;
}
std::vector<std::pair<int, int>> pairs_from_json(const nlohmann::json& j, const char* what) {
    std::vector<std::pair<int, int>> out;
    HINET_CHECK(j.is_array(), ConfigError, what, " must be an array of [conv1, conv2] pairs");
    for (const auto& e : j) {
        HINET_CHECK(e.is_array() && e.size() == 2, ConfigError, what,
                    " entries must be [conv1, conv2] pairs");
        out.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return out;
}
}  // namespace

nlohmann::json ModelConfig::to_json() const {
    return {
        {"input_size", {input_rows, input_cols}},
        {"encoder_channels", encoder_channels},
        {"fusion_filters", pairs_to_json(fusion_filters)},
        {"generator_filters", pairs_to_json(generator_filters)},
        {"generator_head_channels", generator_head_channels},
        {"generator_tail_channels", generator_tail_channels},
        {"discriminator_channels", discriminator_channels},
        {"decoder_channels", decoder_channels},
        {"leaky_slope", leaky_slope},
        {"bn_momentum", bn_momentum},
        {"bn_eps", bn_eps},
        {"fusion_variant", variant_name(fusion_variant)},
    };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        if (j.contains("input_size")) {
            const auto& s = j.at("input_size");
            HINET_CHECK(s.is_array() && s.size() == 2, ConfigError,
                        "input_size must be [rows, cols]");
            c.input_rows = s[0].get<int>();
            c.input_cols = s[1].get<int>();
        }
        if (j.contains("encoder_channels"))
            c.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
        if (j.contains("fusion_filters"))
            c.fusion_filters = pairs_from_json(j.at("fusion_filters"), "fusion_filters");
        if (j.contains("generator_filters"))
            c.generator_filters = pairs_from_json(j.at("generator_filters"), "generator_filters");
        if (j.contains("generator_head_channels"))
            c.generator_head_channels = j.at("generator_head_channels").get<std::vector<int>>();
        if (j.contains("generator_tail_channels"))
            c.generator_tail_channels = j.at("generator_tail_channels").get<std::vector<int>>();
        if (j.contains("discriminator_channels"))
            c.discriminator_channels = j.at("discriminator_channels").get<std::vector<int>>();
        if (j.contains("decoder_channels"))
            c.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
        if (j.contains("leaky_slope")) c.leaky_slope = j.at("leaky_slope").get<double>();
        if (j.contains("bn_momentum")) c.bn_momentum = j.at("bn_momentum").get<double>();
        if (j.contains("bn_eps")) c.bn_eps = j.at("bn_eps").get<double>();
        if (j.contains("fusion_variant"))
            c.fusion_variant = variant_from_name(j.at("fusion_variant").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        fail<ConfigError>("bad model config: ", e.what());
    }
    c.validate();
    return c;
}

}  // namespace hinet
