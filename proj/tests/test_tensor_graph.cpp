#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hinet/graph.hpp"
#include "hinet/rng.hpp"
#include "hinet/util.hpp"
#include "test_support.hpp"

using namespace hinet;
using hinet::testing::TempDir;

TEST_CASE("tensor construction and indexing") {
    Tensor t = Tensor::zeros({2, 3, 4, 5});
    CHECK(t.ndim() == 4);
    CHECK(t.size() == 120);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(3) == 5);
    for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0f);

    // at4 follows row-major (n, c, h, w) layout
    t.at4(1, 2, 3, 4) = 7.0f;
    CHECK(t[((static_cast<int64_t>(1) * 3 + 2) * 4 + 3) * 5 + 4] == 7.0f);

    Tensor f = Tensor::full({3}, 2.5f);
    CHECK(f[0] == 2.5f);
    CHECK(f[2] == 2.5f);

    Tensor v = Tensor::from_values({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    CHECK(v[3] == 4.0f);
    CHECK(v.shape_str() == "(2, 2)");

    v.fill(-1.0f);
    CHECK(v[0] == -1.0f);
}

TEST_CASE("tensor finiteness and shape checks") {
    Tensor t = Tensor::zeros({4});
    CHECK(t.all_finite());
    t[2] = std::numeric_limits<float>::quiet_NaN();
    CHECK(!t.all_finite());
    t[2] = std::numeric_limits<float>::infinity();
    CHECK(!t.all_finite());

    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({3, 2});
    CHECK_THROWS_AS(check_same_shape(a, b, "test"), DimensionError);
    CHECK(Tensor::shape_numel({2, 3, 4}) == 24);
    CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0f}), DimensionError);
}

TEST_CASE("graph backward through a small composite") {
    // loss = mean |a*b + a - 0| with everything positive keeps the abs linear,
    // so d/da = (b + 1)/n and d/db = a/n exactly.
    Graph g;
    Tensor av = Tensor::from_values({1, 1, 1, 2}, {2.0f, 3.0f});
    Tensor bv = Tensor::from_values({1, 1, 1, 2}, {4.0f, 5.0f});
    auto a = g.leaf(av, true);
    auto b = g.leaf(bv, true);
    auto prod = mul(g, a, b);
    auto s = add(g, prod, a);
    auto zero = g.leaf(Tensor::zeros({1, 1, 1, 2}), false);
    auto loss = l1_mean(g, s, zero);
    CHECK(scalar_value(loss) == doctest::Approx(0.5 * (2 * 4 + 2 + 3 * 5 + 3)));

    g.backward(loss);
    CHECK(a->grad[0] == doctest::Approx(0.5 * (4 + 1)));
    CHECK(a->grad[1] == doctest::Approx(0.5 * (5 + 1)));
    CHECK(b->grad[0] == doctest::Approx(0.5 * 2));
    CHECK(b->grad[1] == doctest::Approx(0.5 * 3));
    CHECK(zero->grad.size() == 0);  // no grad allocated for non-requiring leaves
}

TEST_CASE("detach blocks gradient flow") {
    Graph g;
    auto a = g.leaf(Tensor::full({1, 1, 1, 1}, 3.0f), true);
    auto d = detach(g, a);
    CHECK(d->value[0] == 3.0f);
    CHECK(!d->requires_grad);
    auto zero = g.leaf(Tensor::zeros({1, 1, 1, 1}), false);
    auto loss = l1_mean(g, d, zero);
    g.backward(loss);
    CHECK(a->grad.size() == 0);
}

TEST_CASE("elementwise maximum routes ties to the first input") {
    Graph g;
    auto a = g.leaf(Tensor::from_values({1, 1, 1, 3}, {1.0f, 5.0f, 2.0f}), true);
    auto b = g.leaf(Tensor::from_values({1, 1, 1, 3}, {4.0f, 5.0f, 1.0f}), true);
    auto m = maximum(g, a, b);
    CHECK(m->value[0] == 4.0f);
    CHECK(m->value[1] == 5.0f);
    CHECK(m->value[2] == 2.0f);
    auto zero = g.leaf(Tensor::zeros({1, 1, 1, 3}), false);
    auto loss = l1_mean(g, m, zero);
    g.backward(loss);
    // tie at index 1 sends the gradient to a, not b
    CHECK(a->grad[1] == doctest::Approx(1.0 / 3));
    CHECK(b->grad[1] == 0.0f);
    CHECK(a->grad[0] == 0.0f);
    CHECK(b->grad[0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("scalar node arithmetic") {
    Graph g;
    auto a = scalar_const(g, 2.0);
    auto b = scalar_const(g, 3.0);
    auto s = scalar_add(g, a, b);
    auto t = scalar_scale(g, s, 10.0);
    CHECK(scalar_value(t) == doctest::Approx(50.0));
}

TEST_CASE("random source is deterministic per seed") {
    RandomSource a(42), b(42), c(43);
    bool all_same = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const double va = a.normal(0.0, 1.0), vb = b.normal(0.0, 1.0), vc = c.normal(0.0, 1.0);
        all_same = all_same && va == vb;
        any_diff = any_diff || va != vc;
    }
    CHECK(all_same);
    CHECK(any_diff);
}

TEST_CASE("normal draws have roughly standard moments") {
    RandomSource rng(7);
    const int n = 50000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal(0.0, 1.0);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("random state round-trips through its string form") {
    RandomSource a(99);
    for (int i = 0; i < 17; ++i) a.normal(0.0, 1.0);  // odd count leaves a spare cached
    const std::string s = a.state_str();
    RandomSource b(0);
    b.restore_state(s);
    for (int i = 0; i < 50; ++i) CHECK(a.normal(0.0, 1.0) == b.normal(0.0, 1.0));
}

TEST_CASE("shuffle is a seed-determined permutation") {
    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8}, v2 = v1, v0 = v1;
    RandomSource a(5), b(5);
    a.shuffle(v1);
    b.shuffle(v2);
    CHECK(v1 == v2);
    std::sort(v1.begin(), v1.end());
    CHECK(v1 == v0);  // still a permutation
}

TEST_CASE("seed mixing separates streams") {
    std::set<uint64_t> seen;
    for (uint64_t s = 0; s < 20; ++s)
        for (uint64_t e = 0; e < 20; ++e) seen.insert(seed_mix(s, e));
    CHECK(seen.size() == 400);
    CHECK(seed_mix(1, 2) != seed_mix(2, 1));
}

TEST_CASE("sha1 digest matches known vectors") {
    CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
    CHECK(sha1_hex("The quick brown fox jumps over the lazy dog") ==
          "2fd4e1c67a2d28fced849ee1bb76e7391b93eb12");
    // block-boundary lengths
    std::string s64(64, 'a'), s55(55, 'a'), s56(56, 'a');
    CHECK(sha1_hex(s64) == "0098ba824b5c16427bd7a1122a5a442a25ec644d");
    CHECK(sha1_hex(s55).size() == 40);
    CHECK(sha1_hex(s55) != sha1_hex(s56));
}

TEST_CASE("text file round trip and missing-file error") {
    TempDir dir;
    const std::string p = dir.sub("t.txt");
    const std::string content = "line one\nline two\n";
    write_text_file(p, content);
    CHECK(read_text_file(p) == content);
    CHECK_THROWS_AS(read_text_file(dir.sub("absent.txt")), IoError);
}

TEST_CASE("csv parsing") {
    TempDir dir;
    const std::string p = dir.sub("t.csv");
    write_text_file(p, "a,b,c\r\n1,2,3\n4,5,6\n");
    CsvTable t = read_csv(p);
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][2] == "6");
    CHECK(t.column("b") == 1);
    CHECK_THROWS_AS(t.column("missing"), DataError);

    write_text_file(p, "a,b\n1\n");
    CHECK_THROWS_AS(read_csv(p), DataError);  // short row

    write_text_file(p, "");
    CHECK_THROWS_AS(read_csv(p), DataError);  // no header
}
