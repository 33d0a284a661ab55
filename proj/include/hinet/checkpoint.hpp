#pragma once
/// @file checkpoint.hpp
/// Single-file checkpoint container.
///
/// Layout: 8-byte magic "HINETCKP", u32 format version, u32 header length,
/// JSON header, then a float32 little-endian payload.  The header records the
/// model config, free-form metadata, and one entry per tensor with name,
/// kind ("param" | "buffer" | "extra"), shape, and byte offset into the
/// payload.  Loading verifies magic, version, and that every tensor lies
/// inside the payload, so truncated files fail with a size-mismatch error.

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hinet/model.hpp"

namespace hinet {

inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    std::string kind;
    Tensor tensor;
};

/// Writes model params + buffers, plus caller-supplied extra tensors
/// (optimizer state) and metadata.
void save_checkpoint(const std::string& path, const HiNetModel& model,
                     const std::vector<NamedTensor>& extra, const nlohmann::json& meta);

struct LoadedCheckpoint {
    ModelConfig config;
    nlohmann::json meta;
    std::map<std::string, Tensor> params;
    std::map<std::string, Tensor> buffers;
    std::map<std::string, Tensor> extra;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Copies stored params and buffers into the model.  The stored parameter
/// inventory must match the model's exactly (names and shapes), so a
/// checkpoint from one architecture variant refuses to load into another.
void restore_model(HiNetModel& model, const LoadedCheckpoint& ckpt);

}  // namespace hinet
