#include "hinet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace hinet {

Tensor center_crop(const Tensor& img, int out_rows, int out_cols) {
    HINET_CHECK(img.ndim() == 2, DimensionError, "center_crop expects a 2-d image");
    const int rows = img.dim(0), cols = img.dim(1);
    HINET_CHECK(rows >= out_rows && cols >= out_cols, DimensionError, "cannot crop ", rows, "x",
                cols, " to ", out_rows, "x", out_cols);
    const int r0 = (rows - out_rows) / 2;
    const int c0 = (cols - out_cols) / 2;
    Tensor out({out_rows, out_cols});
    for (int r = 0; r < out_rows; ++r)
        for (int c = 0; c < out_cols; ++c)
            out[static_cast<int64_t>(r) * out_cols + c] =
                img[static_cast<int64_t>(r + r0) * cols + (c + c0)];
    return out;
}

std::vector<std::pair<int, int>> patch_anchors(int rows, int cols, int patch) {
    HINET_CHECK(patch > 0 && rows >= patch && cols >= patch, DimensionError, "patch ", patch,
                " does not fit in ", rows, "x", cols);
    std::vector<std::pair<int, int>> anchors;
    for (int r : {0, rows - patch})
        for (int c : {0, cols - patch}) {
            const std::pair<int, int> a{r, c};
            if (std::find(anchors.begin(), anchors.end(), a) == anchors.end())
                anchors.push_back(a);
        }
    return anchors;
}

Tensor extract_patch(const Tensor& img, int row0, int col0, int patch) {
    HINET_CHECK(img.ndim() == 2, DimensionError, "extract_patch expects a 2-d image");
    const int rows = img.dim(0), cols = img.dim(1);
    HINET_CHECK(row0 >= 0 && col0 >= 0 && row0 + patch <= rows && col0 + patch <= cols,
                DimensionError, "patch at (", row0, ",", col0, ") size ", patch,
                " exceeds image ", rows, "x", cols);
    Tensor out({patch, patch});
    for (int r = 0; r < patch; ++r)
        for (int c = 0; c < patch; ++c)
            out[static_cast<int64_t>(r) * patch + c] =
                img[static_cast<int64_t>(row0 + r) * cols + (col0 + c)];
    return out;
}

Tensor stitch_patches(const std::vector<Tensor>& patches,
                      const std::vector<std::pair<int, int>>& anchors, int rows, int cols) {
    HINET_CHECK(patches.size() == anchors.size() && !patches.empty(), DimensionError,
                "stitch needs one anchor per patch");
    const int patch = patches[0].dim(0);
    Tensor sum({rows, cols});
    std::vector<int> count(static_cast<size_t>(rows) * cols, 0);
    for (size_t i = 0; i < patches.size(); ++i) {
        const auto& p = patches[i];
        HINET_CHECK(p.ndim() == 2 && p.dim(0) == patch && p.dim(1) == patch, DimensionError,
                    "stitch patches must share one square size");
        const auto [r0, c0] = anchors[i];
        HINET_CHECK(r0 >= 0 && c0 >= 0 && r0 + patch <= rows && c0 + patch <= cols,
                    DimensionError, "stitch anchor (", r0, ",", c0, ") out of bounds");
        for (int r = 0; r < patch; ++r)
            for (int c = 0; c < patch; ++c) {
                const int64_t idx = static_cast<int64_t>(r0 + r) * cols + (c0 + c);
                sum[idx] += p[static_cast<int64_t>(r) * patch + c];
                ++count[static_cast<size_t>(idx)];
            }
    }
    for (int64_t i = 0; i < sum.size(); ++i) {
        HINET_CHECK(count[static_cast<size_t>(i)] > 0, DimensionError,
                    "stitch patches do not cover the output image");
        sum[i] /= static_cast<float>(count[static_cast<size_t>(i)]);
    }
    return sum;
}

SubjectSplit split_subjects(std::vector<std::string> ids, double train_fraction, uint64_t seed) {
    HINET_CHECK(train_fraction >= 0.0 && train_fraction <= 1.0, ConfigError,
                "train_fraction must lie in [0, 1], got ", train_fraction);
    std::sort(ids.begin(), ids.end());
    RandomSource rng(seed);
    rng.shuffle(ids);
    const size_t n_train = static_cast<size_t>(
        std::llround(train_fraction * static_cast<double>(ids.size())));
    SubjectSplit split;
    split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
    return split;
}

nlohmann::json TaskSpec::to_json() const {
    return {{"source1", source1}, {"source2", source2}, {"target", target}};
}

void TaskSpec::validate() const {
    HINET_CHECK(!source1.empty() && !source2.empty() && !target.empty(), ConfigError,
                "task modalities must be non-empty");
    HINET_CHECK(source1 != target && source2 != target, ConfigError, "target modality '",
                target, "' cannot also be a source");
}

TaskSpec TaskSpec::from_json(const nlohmann::json& j) {
    TaskSpec t;
    try {
        if (j.contains("source1")) t.source1 = j.at("source1").get<std::string>();
        if (j.contains("source2")) t.source2 = j.at("source2").get<std::string>();
        if (j.contains("target")) t.target = j.at("target").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail<ConfigError>("bad task spec: ", e.what());
    }
    t.validate();
    return t;
}

std::vector<std::string> list_subjects(const std::string& root) {
    HINET_CHECK(fs::is_directory(root), DataError, "dataset root is not a directory: ", root);
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    HINET_CHECK(!out.empty(), DataError, "no subject directories under ", root);
    return out;
}

std::string modality_path(const std::string& root, const std::string& subject,
                          const std::string& modality) {
    const fs::path dir = fs::path(root) / subject;
    for (const char* ext : {".hinv", ".nii.gz", ".nii"}) {
        const fs::path p = dir / (modality + ext);
        if (fs::exists(p)) return p.string();
    }
    fail<DataError>("missing modality '", modality, "' for subject '", subject, "' under ", root);
}

Volume load_modality(const std::string& root, const std::string& subject,
                     const std::string& modality) {
    return load_volume(modality_path(root, subject, modality));
}

std::vector<Sample> cut_samples(const std::string& subject, const Volume& x1, const Volume& x2,
                                const Volume& y, const SampleOptions& opt) {
    HINET_CHECK(x1.slices == x2.slices && x1.slices == y.slices && x1.rows == x2.rows &&
                    x1.rows == y.rows && x1.cols == x2.cols && x1.cols == y.cols,
                DataError, "subject '", subject, "': modality volumes disagree in shape");
    const bool crop = x1.rows >= opt.crop_rows && x1.cols >= opt.crop_cols &&
                      (x1.rows > opt.patch || x1.cols > opt.patch);
    if (!crop)
        HINET_CHECK(x1.rows == opt.patch && x1.cols == opt.patch, DataError, "subject '", subject,
                    "': slices are ", x1.rows, "x", x1.cols, "; expected at least ",
                    opt.crop_rows, "x", opt.crop_cols, " (crop then patch) or exactly ",
                    opt.patch, "x", opt.patch);
    std::vector<Sample> out;
    for (int s = 0; s < x1.slices; ++s) {
        Tensor s1 = volume_slice(x1, s), s2 = volume_slice(x2, s), st = volume_slice(y, s);
        if (crop) {
            s1 = center_crop(s1, opt.crop_rows, opt.crop_cols);
            s2 = center_crop(s2, opt.crop_rows, opt.crop_cols);
            st = center_crop(st, opt.crop_rows, opt.crop_cols);
        }
        if (opt.skip_constant_target) {
            float lo = st[0], hi = st[0];
            for (int64_t i = 0; i < st.size(); ++i) {
                lo = st[i] < lo ? st[i] : lo;
                hi = st[i] > hi ? st[i] : hi;
            }
            if (hi - lo < 1e-6f) continue;
        }
        for (const auto& [r0, c0] : patch_anchors(st.dim(0), st.dim(1), opt.patch)) {
            Sample smp;
            smp.subject = subject;
            smp.slice = s;
            smp.anchor_row = r0;
            smp.anchor_col = c0;
            smp.x1 = extract_patch(s1, r0, c0, opt.patch);
            smp.x2 = extract_patch(s2, r0, c0, opt.patch);
            smp.y = extract_patch(st, r0, c0, opt.patch);
            out.push_back(std::move(smp));
        }
    }
    return out;
}

std::vector<Sample> build_samples(const std::string& root,
                                  const std::vector<std::string>& subjects, const TaskSpec& task,
                                  const SampleOptions& opt) {
    std::vector<Sample> out;
    for (const auto& subject : subjects) {
        const Volume x1 = normalize_volume(load_modality(root, subject, task.source1));
        const Volume x2 = normalize_volume(load_modality(root, subject, task.source2));
        const Volume y = normalize_volume(load_modality(root, subject, task.target));
        auto cut = cut_samples(subject, x1, x2, y, opt);
        out.insert(out.end(), std::make_move_iterator(cut.begin()),
                   std::make_move_iterator(cut.end()));
    }
    HINET_CHECK(!out.empty(), DataError, "no usable samples in ", root,
                " (all slices skipped or subject list empty)");
    return out;
}

nlohmann::json DatasetManifest::to_json() const {
    return {{"subjects", subjects},
            {"modalities", modalities},
            {"split", {{"train", split.train}, {"val", split.val}}},
            {"task", task.to_json()},
            {"train_fraction", train_fraction},
            {"split_seed", split_seed}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        m.subjects = j.at("subjects").get<std::vector<std::string>>();
        m.modalities = j.value("modalities", std::vector<std::string>{});
        m.split.train = j.at("split").at("train").get<std::vector<std::string>>();
        m.split.val = j.at("split").at("val").get<std::vector<std::string>>();
        m.task = TaskSpec::from_json(j.at("task"));
        m.train_fraction = j.value("train_fraction", 0.8);
        m.split_seed = j.value("split_seed", 0ull);
    } catch (const nlohmann::json::exception& e) {
        fail<DataError>("bad dataset manifest: ", e.what());
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::ofstream os(path, std::ios::trunc);
    HINET_CHECK(os.good(), IoError, "cannot write manifest: ", path);
    os << m.to_json().dump(2) << '\n';
    HINET_CHECK(os.good(), IoError, "short write: ", path);
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    HINET_CHECK(is.good(), DataError, "cannot open manifest: ", path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        fail<DataError>("manifest is not valid JSON (", e.what(), "): ", path);
    }
    return DatasetManifest::from_json(j);
}

}  // namespace hinet
