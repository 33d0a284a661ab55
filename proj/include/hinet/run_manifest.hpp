#pragma once
/// @file run_manifest.hpp
/// Reproducibility record written at the start of every CLI run.
///
/// A manifest pins everything a run depends on: the command, the synthesis
/// task, the dataset root, the model and training configurations, and a
/// content hash over all of it.  It deliberately carries no timestamps or
/// host details, so re-running an identical manifest replays the run
/// bit-for-bit (same loss log, same outputs).  A saved manifest is itself a
/// valid --config file.

#include <string>

#include <json.hpp>

#include "hinet/model_config.hpp"
#include "hinet/pipeline.hpp"
#include "hinet/trainer.hpp"

namespace hinet {

struct RunManifest {
    std::string command;    ///< CLI subcommand that produced the run
    TaskSpec task;          ///< source modalities -> target
    std::string data_root;  ///< dataset directory
    std::string variant;    ///< fusion variant name
    ModelConfig model;
    TrainConfig train;
    std::string run_id;       ///< derived from content, no timestamps
    std::string config_hash;  ///< hex digest over the fields above

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Digest of the manifest content (everything except run_id/config_hash).
std::string manifest_content_hash(const RunManifest& m);

/// Fills run_id and config_hash from the other fields.
void finalize_manifest(RunManifest& m);

/// Writes <dir>/run_manifest.json, creating the directory if needed.
void write_run_manifest(const std::string& dir, const RunManifest& m);

RunManifest load_run_manifest(const std::string& path);

}  // namespace hinet
