#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "hinet/phantom.hpp"
#include "hinet/pipeline.hpp"
#include "hinet/volume.hpp"
#include "test_support.hpp"

using namespace hinet;
using hinet::testing::TempDir;

namespace {

Volume random_volume(int s, int r, int c, uint64_t seed) {
    Volume v(s, r, c);
    RandomSource rng(seed);
    for (auto& x : v.data) x = static_cast<float>(rng.normal(0.0, 2.0));
    return v;
}

}  // namespace

TEST_CASE("flat volume format round-trips bitwise") {
    TempDir dir;
    Volume v = random_volume(3, 7, 5, 1);
    const std::string p = dir.sub("v.hinv");
    save_volume_hinv(p, v);
    Volume w = load_volume_hinv(p);
    CHECK(w.slices == 3);
    CHECK(w.rows == 7);
    CHECK(w.cols == 5);
    CHECK(std::equal(v.data.begin(), v.data.end(), w.data.begin()));
}

TEST_CASE("flat volume loader rejects malformed files") {
    TempDir dir;
    const std::string p = dir.sub("bad.hinv");
    {
        std::ofstream f(p, std::ios::binary);
        f << "XXXX junk";
    }
    CHECK_THROWS_AS(load_volume_hinv(p), DataError);

    Volume v = random_volume(2, 4, 4, 2);
    const std::string q = dir.sub("trunc.hinv");
    save_volume_hinv(q, v);
    // chop the payload short
    std::error_code ec;
    std::filesystem::resize_file(q, 24, ec);
    REQUIRE(!ec);
    CHECK_THROWS(load_volume_hinv(q));
    CHECK_THROWS_AS(load_volume_hinv(dir.sub("absent.hinv")), IoError);
}

TEST_CASE("compressed medical volume format round-trips") {
    TempDir dir;
    Volume v = random_volume(4, 6, 9, 3);
    const std::string p = dir.sub("v.nii.gz");
    save_volume_nifti(p, v);
    Volume w = load_volume_nifti(p);
    CHECK(w.slices == v.slices);
    CHECK(w.rows == v.rows);
    CHECK(w.cols == v.cols);
    CHECK(std::equal(v.data.begin(), v.data.end(), w.data.begin()));
}

TEST_CASE("volume io dispatches on extension") {
    TempDir dir;
    Volume v = random_volume(2, 4, 4, 4);
    save_volume(dir.sub("a.hinv"), v);
    save_volume(dir.sub("b.nii.gz"), v);
    CHECK(load_volume(dir.sub("a.hinv")).data == v.data);
    CHECK(load_volume(dir.sub("b.nii.gz")).data == v.data);
    CHECK_THROWS_AS(save_volume(dir.sub("c.txt"), v), DataError);
    CHECK_THROWS_AS(load_volume(dir.sub("c.txt")), DataError);
}

TEST_CASE("normalization hits the interval endpoints exactly") {
    for (uint64_t seed : {5ull, 6ull, 7ull}) {
        Volume v = random_volume(2, 8, 8, seed);
        Volume n = normalize_volume(v);
        const float lo = *std::min_element(n.data.begin(), n.data.end());
        const float hi = *std::max_element(n.data.begin(), n.data.end());
        CHECK(lo == -1.0f);
        CHECK(hi == 1.0f);
    }
    Volume flat(1, 4, 4);
    flat.data.assign(flat.data.size(), 3.5f);
    Volume n = normalize_volume(flat);
    for (float x : n.data) CHECK(x == 0.0f);
}

TEST_CASE("slice extraction keeps row-major layout") {
    Volume v = random_volume(3, 4, 5, 8);
    Tensor t = volume_slice(v, 2);
    CHECK(t.shape() == std::vector<int>{4, 5});
    CHECK(t[0] == v.at(2, 0, 0));
    CHECK(t[7] == v.at(2, 1, 2));
}

TEST_CASE("center crop takes the middle window") {
    Tensor img = Tensor::zeros({6, 8});
    for (int64_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
    Tensor c = center_crop(img, 4, 4);
    CHECK(c.shape() == std::vector<int>{4, 4});
    // offset rows (6-4)/2 = 1, cols (8-4)/2 = 2
    CHECK(c[0] == img[1 * 8 + 2]);
    CHECK(c[15] == img[4 * 8 + 5]);
    CHECK_THROWS_AS(center_crop(img, 7, 4), DataError);
}

TEST_CASE("patch anchors cover the image and deduplicate corners") {
    auto a = patch_anchors(160, 180, 128);
    REQUIRE(a.size() == 4);
    CHECK(a[0] == std::pair<int, int>{0, 0});
    CHECK(a[1] == std::pair<int, int>{0, 52});
    CHECK(a[2] == std::pair<int, int>{32, 0});
    CHECK(a[3] == std::pair<int, int>{32, 52});

    auto single = patch_anchors(128, 128, 128);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::pair<int, int>{0, 0});

    RandomSource rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 128 + static_cast<int>(rng.normal(40, 20));
        const int cols = 128 + static_cast<int>(rng.normal(40, 20));
        if (rows < 128 || cols < 128) continue;
        auto anchors = patch_anchors(rows, cols, 128);
        std::set<std::pair<int, int>> uniq(anchors.begin(), anchors.end());
        CHECK(uniq.size() == anchors.size());
        std::vector<int> covered(static_cast<size_t>(rows) * cols, 0);
        for (auto [r0, c0] : anchors) {
            CHECK(r0 + 128 <= rows);
            CHECK(c0 + 128 <= cols);
            for (int i = 0; i < 128; ++i)
                for (int j = 0; j < 128; ++j)
                    covered[static_cast<size_t>(r0 + i) * cols + c0 + j]++;
        }
        CHECK(*std::min_element(covered.begin(), covered.end()) >= 1);
    }
}

TEST_CASE("patch extraction and stitching invert each other") {
    RandomSource rng(10);
    for (auto [rows, cols] : std::vector<std::pair<int, int>>{{160, 180}, {128, 128}, {130, 200}}) {
        Tensor img = Tensor::zeros({rows, cols});
        for (int64_t i = 0; i < img.size(); ++i)
            img[i] = static_cast<float>(rng.normal(0.0, 1.0));
        auto anchors = patch_anchors(rows, cols, 128);
        std::vector<Tensor> patches;
        for (auto [r0, c0] : anchors) patches.push_back(extract_patch(img, r0, c0, 128));
        Tensor back = stitch_patches(patches, anchors, rows, cols);
        CHECK(hinet::testing::max_abs_diff(img, back) == 0.0);
    }
}

TEST_CASE("subject split is deterministic and exhaustive") {
    std::vector<std::string> ids{"e", "c", "a", "d", "b"};
    auto s1 = split_subjects(ids, 0.8, 3);
    auto s2 = split_subjects(ids, 0.8, 3);
    CHECK(s1.train == s2.train);
    CHECK(s1.val == s2.val);
    CHECK(s1.train.size() == 4);  // round(0.8 * 5)
    CHECK(s1.val.size() == 1);

    std::set<std::string> all(s1.train.begin(), s1.train.end());
    all.insert(s1.val.begin(), s1.val.end());
    CHECK(all.size() == 5);

    auto s3 = split_subjects(ids, 1.0, 3);
    CHECK(s3.train.size() == 5);
    CHECK(s3.val.empty());

    // input order must not matter; the split works on sorted ids
    std::vector<std::string> shuffled{"b", "a", "e", "d", "c"};
    auto s4 = split_subjects(shuffled, 0.8, 3);
    CHECK(s4.train == s1.train);

    bool differs = false;
    for (uint64_t seed = 4; seed < 20 && !differs; ++seed)
        differs = split_subjects(ids, 0.8, seed).train != s1.train;
    CHECK(differs);
}

TEST_CASE("task description validation") {
    TaskSpec t;
    CHECK_NOTHROW(t.validate());
    t.target = t.source1;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    TaskSpec t2;
    t2.source2 = "";
    CHECK_THROWS_AS(t2.validate(), ConfigError);
}

TEST_CASE("sample cutting covers slices and anchors") {
    Volume x1 = random_volume(3, 160, 180, 11);
    Volume x2 = random_volume(3, 160, 180, 12);
    Volume y = random_volume(3, 160, 180, 13);
    SampleOptions opt;
    opt.patch = 128;
    opt.crop_rows = 160;
    opt.crop_cols = 180;
    auto samples = cut_samples("subj", x1, x2, y, opt);
    CHECK(samples.size() == 3 * 4);  // three slices, four anchors each
    for (const auto& s : samples) {
        CHECK(s.subject == "subj");
        CHECK(s.x1.shape() == std::vector<int>{128, 128});
        CHECK(s.y.shape() == std::vector<int>{128, 128});
    }
    // anchors recorded so slices can be stitched back
    std::set<std::pair<int, int>> anchors;
    for (const auto& s : samples)
        if (s.slice == 0) anchors.insert({s.anchor_row, s.anchor_col});
    CHECK(anchors.size() == 4);
}

TEST_CASE("constant target patches can be skipped") {
    Volume x1 = random_volume(1, 160, 180, 14);
    Volume x2 = random_volume(1, 160, 180, 15);
    Volume y(1, 160, 180);  // all zero target
    SampleOptions opt;
    opt.skip_constant_target = true;
    auto samples = cut_samples("s", x1, x2, y, opt);
    CHECK(samples.empty());
    opt.skip_constant_target = false;
    CHECK(cut_samples("s", x1, x2, y, opt).size() == 4);
}

TEST_CASE("dataset manifest round-trips through its file form") {
    TempDir dir;
    DatasetManifest m;
    m.subjects = {"a", "b", "c"};
    m.modalities = {"T1", "T2", "Flair"};
    m.split.train = {"a", "b"};
    m.split.val = {"c"};
    m.train_fraction = 0.67;
    m.split_seed = 9;
    const std::string p = dir.sub("manifest.json");
    save_manifest(p, m);
    DatasetManifest r = load_manifest(p);
    CHECK(r.subjects == m.subjects);
    CHECK(r.modalities == m.modalities);
    CHECK(r.split.train == m.split.train);
    CHECK(r.split.val == m.split.val);
    CHECK(r.train_fraction == m.train_fraction);
    CHECK(r.split_seed == m.split_seed);
    CHECK(r.task.target == "Flair");
    CHECK_THROWS_AS(load_manifest(dir.sub("absent.json")), IoError);
}

TEST_CASE("modality file lookup names what is missing") {
    TempDir dir;
    std::filesystem::create_directories(dir.sub("subj01"));
    Volume v = random_volume(1, 4, 4, 16);
    save_volume(dir.sub("subj01/T1.hinv"), v);
    CHECK(modality_path(dir.path(), "subj01", "T1") == dir.sub("subj01/T1.hinv"));
    try {
        modality_path(dir.path(), "subj01", "T2");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("T2") != std::string::npos);
        CHECK(msg.find("subj01") != std::string::npos);
    }
}

TEST_CASE("phantom subjects are seed-deterministic") {
    auto a = make_phantom_subject(33, 2, 64, 64);
    auto b = make_phantom_subject(33, 2, 64, 64);
    auto c = make_phantom_subject(34, 2, 64, 64);
    CHECK(a.x1.data == b.x1.data);
    CHECK(a.x2.data == b.x2.data);
    CHECK(a.y.data == b.y.data);
    CHECK(a.x1.data != c.x1.data);
    CHECK(a.x1.rows == 64);
    CHECK(a.y.slices == 2);
}

TEST_CASE("phantom target is not an affine function of either source") {
    // the best per-volume affine fit from one source must leave real residual,
    // so a model must combine both sources to synthesize the target
    auto ph = make_phantom_subject(21, 2, 96, 96);
    Volume ny = normalize_volume(ph.y);
    for (const Volume* src : {&ph.x1, &ph.x2}) {
        Volume nx = normalize_volume(*src);
        const int64_t n = ny.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int64_t i = 0; i < n; ++i) {
            sx += nx.data[i];
            sy += ny.data[i];
            sxx += static_cast<double>(nx.data[i]) * nx.data[i];
            sxy += static_cast<double>(nx.data[i]) * ny.data[i];
        }
        const double denom = sxx - sx * sx / n;
        const double a = denom != 0.0 ? (sxy - sx * sy / n) / denom : 0.0;
        const double b = (sy - a * sx) / n;
        double mse = 0;
        for (int64_t i = 0; i < n; ++i) {
            const double r = ny.data[i] - (a * nx.data[i] + b);
            mse += r * r;
        }
        mse /= static_cast<double>(n);
        CHECK(mse > 1e-3);
    }
}

TEST_CASE("phantom dataset generation writes a loadable tree") {
    TempDir dir;
    PhantomOptions opt;
    opt.subjects = 3;
    opt.slices = 1;
    opt.rows = opt.cols = 48;
    opt.seed = 5;
    opt.train_fraction = 0.67;
    DatasetManifest m = make_phantom_dataset(dir.path(), opt);
    CHECK(m.subjects.size() == 3);
    CHECK(m.split.train.size() == 2);
    CHECK(m.split.val.size() == 1);
    CHECK(m.modalities.size() == 3);
    DatasetManifest loaded = load_manifest(dir.sub("manifest.json"));
    CHECK(loaded.subjects == m.subjects);
    for (const auto& s : m.subjects)
        for (const auto& mod : m.modalities) {
            Volume v = load_modality(dir.path(), s, mod);
            CHECK(v.rows == 48);
            CHECK(v.slices == 1);
        }
    auto subjects = list_subjects(dir.path());
    CHECK(subjects == m.subjects);
}

TEST_CASE("sample building honors the task and patch options") {
    TempDir dir;
    PhantomOptions opt;
    opt.subjects = 2;
    opt.slices = 2;
    opt.rows = opt.cols = 64;
    opt.seed = 6;
    DatasetManifest m = make_phantom_dataset(dir.path(), opt);
    SampleOptions sopt;
    sopt.patch = 32;
    sopt.crop_rows = sopt.crop_cols = 64;
    auto samples = build_samples(dir.path(), m.subjects, m.task, sopt);
    CHECK(samples.size() == 2 * 2 * 4);  // subjects x slices x (2x2 anchors at 64->32)
    for (const auto& s : samples) {
        CHECK(s.x1.shape() == std::vector<int>{32, 32});
        // network domain inputs
        for (int64_t i = 0; i < s.x1.size(); ++i) {
            CHECK(s.x1[i] >= -1.0f);
            CHECK(s.x1[i] <= 1.0f);
        }
    }
}
