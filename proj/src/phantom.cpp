#include "hinet/phantom.hpp"

#include <cmath>
#include <filesystem>

namespace fs = std::filesystem;

namespace hinet {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Sum of three random low-frequency sinusoids over the slice.
void fill_field(RandomSource& rng, int rows, int cols, std::vector<float>& out) {
    double amp[3], ph[3];
    int p[3], q[3];
    for (int j = 0; j < 3; ++j) {
        amp[j] = rng.uniform(0.3, 1.0);
        p[j] = 1 + static_cast<int>(rng.below(4));
        q[j] = 1 + static_cast<int>(rng.below(4));
        ph[j] = rng.uniform(0.0, kTwoPi);
    }
    out.assign(static_cast<size_t>(rows) * cols, 0.0f);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double v = 0.0;
            for (int j = 0; j < 3; ++j)
                v += amp[j] * std::sin(kTwoPi * (p[j] * static_cast<double>(r) / rows +
                                                 q[j] * static_cast<double>(c) / cols) +
                                       ph[j]);
            out[static_cast<size_t>(r) * cols + c] = static_cast<float>(v);
        }
}

/// Union of two random ellipses.
void fill_mask(RandomSource& rng, int rows, int cols, std::vector<uint8_t>& mask) {
    mask.assign(static_cast<size_t>(rows) * cols, 0);
    for (int e = 0; e < 2; ++e) {
        const double cr = rng.uniform(0.25, 0.75) * rows;
        const double cc = rng.uniform(0.25, 0.75) * cols;
        const double ar = rng.uniform(0.10, 0.25) * rows;
        const double ac = rng.uniform(0.10, 0.25) * cols;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) {
                const double dr = (r - cr) / ar, dc = (c - cc) / ac;
                if (dr * dr + dc * dc <= 1.0) mask[static_cast<size_t>(r) * cols + c] = 1;
            }
    }
}

}  // namespace

PhantomVolumes make_phantom_subject(uint64_t seed, int slices, int rows, int cols) {
    HINET_CHECK(slices > 0 && rows > 0 && cols > 0, ConfigError, "phantom dims must be positive");
    RandomSource rng(seed);
    PhantomVolumes v{Volume(slices, rows, cols), Volume(slices, rows, cols),
                     Volume(slices, rows, cols)};
    std::vector<float> f1, f2;
    std::vector<uint8_t> mask;
    for (int s = 0; s < slices; ++s) {
        fill_field(rng, rows, cols, f1);
        fill_field(rng, rows, cols, f2);
        fill_mask(rng, rows, cols, mask);
        const int64_t base = static_cast<int64_t>(s) * rows * cols;
        for (int64_t i = 0; i < static_cast<int64_t>(rows) * cols; ++i) {
            const float a = f1[static_cast<size_t>(i)] + (mask[static_cast<size_t>(i)] ? 0.9f : 0.0f);
            const float b = f2[static_cast<size_t>(i)] + (mask[static_cast<size_t>(i)] ? 0.7f : 0.0f);
            v.x1.data[static_cast<size_t>(base + i)] = a;
            v.x2.data[static_cast<size_t>(base + i)] = b;
            v.y.data[static_cast<size_t>(base + i)] =
                mask[static_cast<size_t>(i)] ? (a > b ? a : b) : 0.5f * (a + b);
        }
    }
    return v;
}

DatasetManifest make_phantom_dataset(const std::string& root, const PhantomOptions& opt) {
    HINET_CHECK(opt.subjects > 0, ConfigError, "need at least one phantom subject");
    fs::create_directories(root);
    DatasetManifest m;
    m.task = TaskSpec{};  // T1 + T2 -> Flair
    m.modalities = {m.task.source1, m.task.source2, m.task.target};
    m.train_fraction = opt.train_fraction;
    m.split_seed = opt.seed;
    for (int i = 0; i < opt.subjects; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "phantom_%03d", i);
        const fs::path dir = fs::path(root) / name;
        fs::create_directories(dir);
        const PhantomVolumes v =
            make_phantom_subject(seed_mix(opt.seed, static_cast<uint64_t>(i)), opt.slices,
                                 opt.rows, opt.cols);
        save_volume_hinv((dir / (m.task.source1 + ".hinv")).string(), v.x1);
        save_volume_hinv((dir / (m.task.source2 + ".hinv")).string(), v.x2);
        save_volume_hinv((dir / (m.task.target + ".hinv")).string(), v.y);
        m.subjects.push_back(name);
    }
    m.split = split_subjects(m.subjects, opt.train_fraction, opt.seed);
    save_manifest((fs::path(root) / "manifest.json").string(), m);
    return m;
}

}  // namespace hinet
