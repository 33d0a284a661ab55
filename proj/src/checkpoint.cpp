#include "hinet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace hinet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian float32");

namespace {
constexpr char kMagic[8] = {'H', 'I', 'N', 'E', 'T', 'C', 'K', 'P'};

void append_u32(std::string& out, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}
}  // namespace

void save_checkpoint(const std::string& path, const HiNetModel& model,
                     const std::vector<NamedTensor>& extra, const nlohmann::json& meta) {
    nlohmann::json entries = nlohmann::json::array();
    std::vector<const Tensor*> order;
    uint64_t offset = 0;
    auto add = [&](const std::string& name, const std::string& kind, const Tensor& t) {
        entries.push_back({{"name", name},
                           {"kind", kind},
                           {"shape", t.shape()},
                           {"offset", offset}});
        order.push_back(&t);
        offset += static_cast<uint64_t>(t.size()) * sizeof(float);
    };
    for (const auto& p : model.params().params()) add(p.name, "param", p.node->value);
    for (auto& [name, t] : const_cast<HiNetModel&>(model).params().buffers())
        add(name, "buffer", *t);
    for (const auto& e : extra) add(e.name, e.kind, e.tensor);

    nlohmann::json header = {{"model_config", model.config().to_json()},
                             {"meta", meta},
                             {"payload_bytes", offset},
                             {"tensors", entries}};
    const std::string header_str = header.dump();

    std::string blob;
    blob.append(kMagic, sizeof(kMagic));
    append_u32(blob, kCheckpointVersion);
    append_u32(blob, static_cast<uint32_t>(header_str.size()));
    blob += header_str;
    const size_t payload_start = blob.size();
    blob.resize(payload_start + offset);
    {
        uint64_t pos = payload_start;
        for (const Tensor* t : order) {
            const size_t bytes = static_cast<size_t>(t->size()) * sizeof(float);
            std::memcpy(blob.data() + pos, t->data(), bytes);
            pos += bytes;
        }
    }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    HINET_CHECK(os.good(), IoError, "cannot open checkpoint for writing: ", path);
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    HINET_CHECK(os.good(), IoError, "short write to checkpoint: ", path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    HINET_CHECK(is.good(), IoError, "cannot open checkpoint: ", path);
    std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    HINET_CHECK(blob.size() >= sizeof(kMagic) + 8, DataError, "checkpoint too small: ", path);
    HINET_CHECK(std::memcmp(blob.data(), kMagic, sizeof(kMagic)) == 0, DataError,
                "not a checkpoint file (bad magic): ", path);
    uint32_t version = 0, header_len = 0;
    std::memcpy(&version, blob.data() + 8, 4);
    std::memcpy(&header_len, blob.data() + 12, 4);
    HINET_CHECK(version == kCheckpointVersion, DataError, "checkpoint format version ", version,
                " != supported version ", kCheckpointVersion, ": ", path);
    HINET_CHECK(blob.size() >= 16 + static_cast<size_t>(header_len), DataError,
                "checkpoint header truncated: ", path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(16, header_len));
    } catch (const nlohmann::json::exception& e) {
        fail<DataError>("checkpoint header is not valid JSON (", e.what(), "): ", path);
    }

    LoadedCheckpoint out;
    try {
        out.config = ModelConfig::from_json(header.at("model_config"));
        out.meta = header.value("meta", nlohmann::json::object());
        const uint64_t payload_bytes = header.at("payload_bytes").get<uint64_t>();
        const size_t payload_start = 16 + header_len;
        HINET_CHECK(blob.size() - payload_start == payload_bytes, DataError,
                    "checkpoint payload size mismatch (have ", blob.size() - payload_start,
                    " bytes, header says ", payload_bytes, "): ", path);
        for (const auto& e : header.at("tensors")) {
            const std::string name = e.at("name").get<std::string>();
            const std::string kind = e.at("kind").get<std::string>();
            const auto shape = e.at("shape").get<std::vector<int>>();
            const uint64_t off = e.at("offset").get<uint64_t>();
            const uint64_t bytes =
                static_cast<uint64_t>(Tensor::shape_numel(shape)) * sizeof(float);
            HINET_CHECK(off + bytes <= payload_bytes, DataError, "tensor '", name,
                        "' extends past checkpoint payload: ", path);
            Tensor t(shape);
            std::memcpy(t.data(), blob.data() + payload_start + off, bytes);
            auto& dst = kind == "param" ? out.params : (kind == "buffer" ? out.buffers : out.extra);
            HINET_CHECK(dst.emplace(name, std::move(t)).second, DataError,
                        "duplicate tensor '", name, "' in checkpoint: ", path);
        }
    } catch (const nlohmann::json::exception& e) {
        fail<DataError>("malformed checkpoint header (", e.what(), "): ", path);
    }
    return out;
}

void restore_model(HiNetModel& model, const LoadedCheckpoint& ckpt) {
    const std::string model_variant = variant_name(model.config().fusion_variant);
    const std::string stored_variant = variant_name(ckpt.config.fusion_variant);
    HINET_CHECK(model_variant == stored_variant, DataError,
                "checkpoint config mismatch: stored variant '", stored_variant,
                "' does not match model variant '", model_variant, "'");
    const auto& live = model.params().params();
    HINET_CHECK(live.size() == ckpt.params.size(), DataError,
                "checkpoint config mismatch: model has ", live.size(),
                " parameters, checkpoint stores ", ckpt.params.size());
    for (const auto& p : live) {
        auto it = ckpt.params.find(p.name);
        HINET_CHECK(it != ckpt.params.end(), DataError,
                    "checkpoint config mismatch: missing parameter '", p.name, "'");
        check_same_shape(p.node->value, it->second, "parameter '" + p.name + "'");
        p.node->value = it->second;
    }
    for (auto& [name, t] : model.params().buffers()) {
        auto it = ckpt.buffers.find(name);
        HINET_CHECK(it != ckpt.buffers.end(), DataError,
                    "checkpoint config mismatch: missing buffer '", name, "'");
        check_same_shape(*t, it->second, "buffer '" + name + "'");
        *t = it->second;
    }
}

}  // namespace hinet
