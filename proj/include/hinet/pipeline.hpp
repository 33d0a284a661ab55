#pragma once
/// @file pipeline.hpp
/// Slice preparation: per-volume normalization, center crop, corner patches,
/// patch stitching, subject splits, and sample assembly.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hinet/rng.hpp"
#include "hinet/volume.hpp"

namespace hinet {

/// Center crop of a (rows, cols) tensor; offsets are floor((in - out) / 2).
Tensor center_crop(const Tensor& img, int out_rows, int out_cols);

/// Unique corner anchors (row, col) of patch placements covering the image:
/// {(0,0), (0, cols-p), (rows-p, 0), (rows-p, cols-p)} deduplicated, in
/// row-major order.  160x180 with p=128 gives (0,0), (0,52), (32,0), (32,52).
std::vector<std::pair<int, int>> patch_anchors(int rows, int cols, int patch);

Tensor extract_patch(const Tensor& img, int row0, int col0, int patch);

/// Inverse of patching: per-pixel mean of all covering patches.  With corner
/// anchors the coverage counts are powers of two, so stitching patches cut
/// from one image reproduces it exactly.
Tensor stitch_patches(const std::vector<Tensor>& patches,
                      const std::vector<std::pair<int, int>>& anchors, int rows, int cols);

/// Deterministic shuffled split; round(train_fraction * n) subjects train,
/// the rest validate.  Disjoint and exhaustive.
struct SubjectSplit {
    std::vector<std::string> train, val;
};
SubjectSplit split_subjects(std::vector<std::string> ids, double train_fraction, uint64_t seed);

/// Which modality plays which role in a synthesis task.
struct TaskSpec {
    std::string source1 = "T1";
    std::string source2 = "T2";
    std::string target = "Flair";

    /// Throws ConfigError when a modality is empty or the target doubles
    /// as a source.
    void validate() const;

    nlohmann::json to_json() const;
    static TaskSpec from_json(const nlohmann::json& j);
};

struct SampleOptions {
    int patch = 128;
    int crop_rows = 160;
    int crop_cols = 180;
    bool skip_constant_target = false;
};

/// One training example: aligned source and target patches plus provenance.
struct Sample {
    std::string subject;
    int slice = 0;
    int anchor_row = 0, anchor_col = 0;
    Tensor x1, x2, y;  // (patch, patch)
};

/// Subject directories under root, sorted by name.
std::vector<std::string> list_subjects(const std::string& root);

/// Path of the first existing <root>/<subject>/<modality>.{hinv,nii.gz,nii};
/// errors naming the missing modality otherwise.
std::string modality_path(const std::string& root, const std::string& subject,
                          const std::string& modality);

/// <root>/<subject>/<modality>.{hinv,nii,nii.gz}, first match.
Volume load_modality(const std::string& root, const std::string& subject,
                     const std::string& modality);

/// Normalizes each volume, crops (when slices are larger than the patch),
/// and cuts corner patches.  Slices already at patch size pass through with
/// a single (0,0) anchor.  Order is (subject, slice, anchor), subjects in
/// the order given.
std::vector<Sample> build_samples(const std::string& root,
                                  const std::vector<std::string>& subjects, const TaskSpec& task,
                                  const SampleOptions& opt);

/// Same cutting rules applied to three already-normalized volumes.
std::vector<Sample> cut_samples(const std::string& subject, const Volume& x1, const Volume& x2,
                                const Volume& y, const SampleOptions& opt);

/// Dataset manifest: subject list, available modalities, task, and the
/// train/val split.
struct DatasetManifest {
    std::vector<std::string> subjects;
    std::vector<std::string> modalities;  // present for every listed subject
    SubjectSplit split;
    TaskSpec task;
    double train_fraction = 0.8;
    uint64_t split_seed = 0;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
};

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

}  // namespace hinet
