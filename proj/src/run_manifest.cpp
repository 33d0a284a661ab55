#include "hinet/run_manifest.hpp"

#include <filesystem>
#include <fstream>

#include "hinet/util.hpp"

namespace fs = std::filesystem;

namespace hinet {

nlohmann::json RunManifest::to_json() const {
    return {{"command", command},
            {"task", task.to_json()},
            {"data_root", data_root},
            {"variant", variant},
            {"model", model.to_json()},
            {"train", train.to_json()},
            {"run_id", run_id},
            {"config_hash", config_hash}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.command = j.value("command", std::string{});
        if (j.contains("task")) m.task = TaskSpec::from_json(j.at("task"));
        m.data_root = j.value("data_root", std::string{});
        m.variant = j.value("variant", std::string{"hybrid"});
        if (j.contains("model")) m.model = ModelConfig::from_json(j.at("model"));
        if (j.contains("train")) m.train = TrainConfig::from_json(j.at("train"));
        m.run_id = j.value("run_id", std::string{});
        m.config_hash = j.value("config_hash", std::string{});
    } catch (const nlohmann::json::exception& e) {
        fail<ConfigError>("bad run manifest: ", e.what());
    }
    return m;
}

std::string manifest_content_hash(const RunManifest& m) {
    nlohmann::json j = m.to_json();
    j.erase("run_id");
    j.erase("config_hash");
    // nlohmann::json objects serialize with sorted keys, so the dump is a
    // canonical form of the content.
    return sha1_hex(j.dump());
}

void finalize_manifest(RunManifest& m) {
    m.config_hash = manifest_content_hash(m);
    m.run_id = m.command + "-" + m.variant + "-s" + std::to_string(m.train.seed) + "-" +
               m.config_hash.substr(0, 8);
}

void write_run_manifest(const std::string& dir, const RunManifest& m) {
    HINET_CHECK(!m.config_hash.empty(), ConfigError,
                "run manifest must be finalized before writing");
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / "run_manifest.json").string(), m.to_json().dump(2) + "\n");
}

RunManifest load_run_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail<ConfigError>("run manifest is not valid JSON (", e.what(), "): ", path);
    }
    return RunManifest::from_json(j);
}

}  // namespace hinet
