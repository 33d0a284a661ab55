#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>

#include "hinet/graph.hpp"
#include "hinet/objectives.hpp"
#include "test_support.hpp"

using namespace hinet;
using hinet::testing::conv_ref;
using hinet::testing::fd_check;
using hinet::testing::max_abs_diff;
using hinet::testing::random_tensor;

namespace {

/// Scalarizes y as mean(y * wts) + 100 via the L1 node; the offset keeps the
/// absolute value linear so gradients stay smooth for finite differences.
NodeRef weighted_mean(Graph& g, const NodeRef& y, const Tensor& wts) {
    auto w = g.leaf(wts, false);
    auto p = mul(g, y, w);
    auto off = g.leaf(Tensor::full(wts.shape(), -100.0f), false);
    return l1_mean(g, p, off);
}

}  // namespace

TEST_CASE("stride-1 convolution matches the direct reference") {
    RandomSource rng(11);
    for (auto [n, cin, cout, h, w] : std::vector<std::array<int, 5>>{
             {1, 1, 1, 3, 3}, {1, 2, 4, 5, 7}, {3, 3, 2, 4, 4}, {4, 5, 3, 6, 5}, {2, 1, 3, 1, 1}}) {
        Graph g(true, false);
        Tensor xv = random_tensor({n, cin, h, w}, rng);
        Tensor wv = random_tensor({cout, cin, 3, 3}, rng, 0.5);
        Tensor bv = random_tensor({cout}, rng, 0.5);
        auto y = conv2d(g, g.leaf(xv), g.leaf(wv), g.leaf(bv), 1, 1);
        Tensor ref = conv_ref(xv, wv, bv, 1);
        CHECK(max_abs_diff(y->value, ref) < 1e-4);
    }
}

TEST_CASE("stride-1 convolution keeps batch samples independent") {
    // A batched pass must equal the per-sample passes stacked; padding from one
    // sample must never leak into a neighbor.
    RandomSource rng(12);
    const int n = 3, cin = 2, cout = 3, h = 6, w = 5;
    Tensor xv = random_tensor({n, cin, h, w}, rng);
    Tensor wv = random_tensor({cout, cin, 3, 3}, rng, 0.5);
    Tensor bv = random_tensor({cout}, rng, 0.5);
    Graph g(true, false);
    auto y = conv2d(g, g.leaf(xv), g.leaf(wv), g.leaf(bv), 1, 1);
    for (int ni = 0; ni < n; ++ni) {
        Tensor one = Tensor::zeros({1, cin, h, w});
        for (int64_t i = 0; i < one.size(); ++i)
            one[i] = xv[static_cast<int64_t>(ni) * cin * h * w + i];
        Graph g1(true, false);
        auto y1 = conv2d(g1, g1.leaf(one), g1.leaf(wv), g1.leaf(bv), 1, 1);
        for (int64_t i = 0; i < y1->value.size(); ++i)
            CHECK(std::abs(y1->value[i] - y->value[static_cast<int64_t>(ni) * cout * h * w + i]) <
                  1e-6);
    }
}

TEST_CASE("stride-1 convolution gradients agree with finite differences") {
    RandomSource rng(13);
    const int n = 2, cin = 2, cout = 3, h = 4, w = 5;
    Tensor xv = random_tensor({n, cin, h, w}, rng);
    Tensor wv = random_tensor({cout, cin, 3, 3}, rng, 0.5);
    Tensor bv = random_tensor({cout}, rng, 0.5);
    Tensor wts = random_tensor({n, cout, h, w}, rng, 0.3);

    Graph g;
    auto x = g.leaf(xv, true), wp = g.leaf(wv, true), bp = g.leaf(bv, true);
    auto loss = weighted_mean(g, conv2d(g, x, wp, bp, 1, 1), wts);
    g.backward(loss);
    Tensor gx = x->grad, gw = wp->grad, gb = bp->grad;

    auto eval = [&]() {
        Graph h2(true, false);
        return scalar_value(
            weighted_mean(h2, conv2d(h2, h2.leaf(xv), h2.leaf(wv), h2.leaf(bv), 1, 1), wts));
    };
    CHECK(fd_check(xv, gx, eval) < 2e-3);
    CHECK(fd_check(wv, gw, eval) < 2e-3);
    CHECK(fd_check(bv, gb, eval) < 2e-3);
}

TEST_CASE("stride-2 convolution matches the direct reference") {
    RandomSource rng(14);
    for (auto [n, cin, cout, h, w] : std::vector<std::array<int, 5>>{
             {1, 1, 2, 4, 4}, {2, 3, 2, 8, 8}, {1, 2, 3, 7, 5}, {3, 2, 2, 6, 10}}) {
        Graph g(true, false);
        Tensor xv = random_tensor({n, cin, h, w}, rng);
        Tensor wv = random_tensor({cout, cin, 3, 3}, rng, 0.5);
        Tensor bv = random_tensor({cout}, rng, 0.5);
        auto y = conv2d(g, g.leaf(xv), g.leaf(wv), g.leaf(bv), 2, 1);
        Tensor ref = conv_ref(xv, wv, bv, 2);
        CHECK(y->value.dim(2) == (h - 1) / 2 + 1);
        CHECK(y->value.dim(3) == (w - 1) / 2 + 1);
        CHECK(max_abs_diff(y->value, ref) < 1e-4);
    }
}

TEST_CASE("stride-2 convolution gradients agree with finite differences") {
    RandomSource rng(15);
    const int n = 2, cin = 2, cout = 2, h = 6, w = 5;
    Tensor xv = random_tensor({n, cin, h, w}, rng);
    Tensor wv = random_tensor({cout, cin, 3, 3}, rng, 0.5);
    Tensor bv = random_tensor({cout}, rng, 0.5);
    Tensor wts = random_tensor({n, cout, 3, 3}, rng, 0.3);

    Graph g;
    auto x = g.leaf(xv, true), wp = g.leaf(wv, true), bp = g.leaf(bv, true);
    auto loss = weighted_mean(g, conv2d(g, x, wp, bp, 2, 1), wts);
    g.backward(loss);
    Tensor gx = x->grad, gw = wp->grad, gb = bp->grad;

    auto eval = [&]() {
        Graph h2(true, false);
        return scalar_value(
            weighted_mean(h2, conv2d(h2, h2.leaf(xv), h2.leaf(wv), h2.leaf(bv), 2, 1), wts));
    };
    CHECK(fd_check(xv, gx, eval) < 2e-3);
    CHECK(fd_check(wv, gw, eval) < 2e-3);
    CHECK(fd_check(bv, gb, eval) < 2e-3);
}

TEST_CASE("convolution rejects malformed arguments") {
    Graph g(true, false);
    auto x = g.leaf(Tensor::zeros({1, 2, 4, 4}));
    auto w = g.leaf(Tensor::zeros({3, 2, 3, 3}));
    auto b = g.leaf(Tensor::zeros({3}));
    CHECK_THROWS_AS(conv2d(g, g.leaf(Tensor::zeros({2, 4, 4})), w, b, 1, 1), DimensionError);
    CHECK_THROWS_AS(conv2d(g, x, g.leaf(Tensor::zeros({3, 2, 5, 5})), b, 1, 1), DimensionError);
    CHECK_THROWS_AS(conv2d(g, x, g.leaf(Tensor::zeros({3, 4, 3, 3})), b, 1, 1), DimensionError);
    CHECK_THROWS_AS(conv2d(g, x, w, g.leaf(Tensor::zeros({2})), 1, 1), DimensionError);
    CHECK_THROWS_AS(conv2d(g, x, w, b, 3, 1), ConfigError);
    CHECK_THROWS_AS(conv2d(g, x, w, b, 1, 0), ConfigError);
}

TEST_CASE("batch norm training forward matches per-channel statistics") {
    RandomSource rng(16);
    const int n = 3, c = 2, h = 4, w = 5;
    Tensor xv = random_tensor({n, c, h, w}, rng, 2.0);
    Tensor gv = random_tensor({c}, rng, 0.5);
    Tensor bv = random_tensor({c}, rng, 0.5);
    const double momentum = 0.1, eps = 1e-5;
    Tensor rm = Tensor::full({c}, 0.25f), rv = Tensor::full({c}, 0.75f);
    Tensor rm0 = rm, rv0 = rv;

    Graph g;
    auto y = batchnorm2d(g, g.leaf(xv), g.leaf(gv), g.leaf(bv), rm, rv, momentum, eps);

    const int64_t cnt = static_cast<int64_t>(n) * h * w;
    for (int ci = 0; ci < c; ++ci) {
        double sum = 0.0;
        for (int ni = 0; ni < n; ++ni)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) sum += xv.at4(ni, ci, i, j);
        const double mean = sum / cnt;
        double ss = 0.0;
        for (int ni = 0; ni < n; ++ni)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double d = xv.at4(ni, ci, i, j) - mean;
                    ss += d * d;
                }
        const double var_b = ss / cnt;               // biased, used to normalize
        const double var_u = ss / (cnt - 1);         // unbiased, tracked
        for (int ni = 0; ni < n; ++ni)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double expect =
                        (xv.at4(ni, ci, i, j) - mean) / std::sqrt(var_b + eps) * gv[ci] + bv[ci];
                    CHECK(y->value.at4(ni, ci, i, j) == doctest::Approx(expect).epsilon(1e-4));
                }
        CHECK(rm[ci] == doctest::Approx((1 - momentum) * rm0[ci] + momentum * mean).epsilon(1e-5));
        CHECK(rv[ci] == doctest::Approx((1 - momentum) * rv0[ci] + momentum * var_u).epsilon(1e-5));
    }
}

TEST_CASE("batch norm eval forward uses the running buffers") {
    RandomSource rng(17);
    const int n = 2, c = 2, h = 3, w = 3;
    Tensor xv = random_tensor({n, c, h, w}, rng);
    Tensor gv = Tensor::full({c}, 1.5f), bv = Tensor::full({c}, -0.5f);
    Tensor rm = Tensor::from_values({c}, {0.2f, -0.3f});
    Tensor rv = Tensor::from_values({c}, {0.9f, 1.4f});
    Tensor rm_before = rm, rv_before = rv;

    Graph g(false, false);  // eval mode
    auto y = batchnorm2d(g, g.leaf(xv), g.leaf(gv), g.leaf(bv), rm, rv, 0.1, 1e-5);
    for (int ci = 0; ci < c; ++ci)
        for (int ni = 0; ni < n; ++ni)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    const double expect = (xv.at4(ni, ci, i, j) - rm_before[ci]) /
                                              std::sqrt(rv_before[ci] + 1e-5) * 1.5 - 0.5;
                    CHECK(y->value.at4(ni, ci, i, j) == doctest::Approx(expect).epsilon(1e-4));
                }
    // eval mode must not touch the buffers
    CHECK(max_abs_diff(rm, rm_before) == 0.0);
    CHECK(max_abs_diff(rv, rv_before) == 0.0);
}

TEST_CASE("batch norm gradients agree with finite differences") {
    RandomSource rng(18);
    const int n = 3, c = 2, h = 3, w = 4;
    Tensor xv = random_tensor({n, c, h, w}, rng);
    Tensor gv = random_tensor({c}, rng, 0.5);
    Tensor bv = random_tensor({c}, rng, 0.5);
    Tensor wts = random_tensor({n, c, h, w}, rng, 0.3);

    for (bool training : {true, false}) {
        CAPTURE(training);
        Tensor rm = Tensor::from_values({c}, {0.1f, -0.2f});
        Tensor rv = Tensor::from_values({c}, {1.2f, 0.8f});
        Graph g(training, true);
        auto x = g.leaf(xv, true), gp = g.leaf(gv, true), bp = g.leaf(bv, true);
        Tensor rmc = rm, rvc = rv;  // keep FD evaluations off the live buffers
        auto loss = weighted_mean(g, batchnorm2d(g, x, gp, bp, rmc, rvc, 0.1, 1e-5), wts);
        g.backward(loss);
        Tensor gx = x->grad, gg = gp->grad, gb = bp->grad;

        auto eval = [&]() {
            Tensor rm2 = rm, rv2 = rv;
            Graph h2(training, false);
            return scalar_value(weighted_mean(
                h2, batchnorm2d(h2, h2.leaf(xv), h2.leaf(gv), h2.leaf(bv), rm2, rv2, 0.1, 1e-5),
                wts));
        };
        CHECK(fd_check(xv, gx, eval, 1e-2) < 5e-3);
        CHECK(fd_check(gv, gg, eval, 1e-2) < 5e-3);
        CHECK(fd_check(bv, gb, eval, 1e-2) < 5e-3);
    }
}

TEST_CASE("max pooling picks window maxima and routes gradients to them") {
    Graph g;
    // one 4x4 channel with known window winners
    Tensor xv = Tensor::from_values({1, 1, 4, 4}, {1, 2, 0, 0,   //
                                                   3, 1, 0, 4,   //
                                                   5, 5, 1, 1,   //
                                                   5, 5, 1, 1});
    auto x = g.leaf(xv, true);
    auto y = maxpool2x2(g, x);
    CHECK(y->value.dim(2) == 2);
    CHECK(y->value[0] == 3.0f);
    CHECK(y->value[1] == 4.0f);
    CHECK(y->value[2] == 5.0f);
    CHECK(y->value[3] == 1.0f);

    auto zero = g.leaf(Tensor::zeros({1, 1, 2, 2}), false);
    g.backward(l1_mean(g, y, zero));
    // all-equal window routes to the first element in scan order
    CHECK(x->grad[8] == doctest::Approx(0.25));   // (2,0) wins the tie
    CHECK(x->grad[9] == 0.0f);
    CHECK(x->grad[4] == doctest::Approx(0.25));   // 3 at (1,0)
    CHECK(x->grad[7] == doctest::Approx(0.25));   // 4 at (1,3)
    CHECK_THROWS_AS(maxpool2x2(g, g.leaf(Tensor::zeros({1, 1, 3, 4}))), DimensionError);
}

TEST_CASE("nearest upsampling doubles each pixel and sums gradients back") {
    Graph g;
    Tensor xv = Tensor::from_values({1, 1, 2, 2}, {1, 2, 3, 4});
    auto x = g.leaf(xv, true);
    auto y = upsample2x_nearest(g, x);
    REQUIRE(y->value.size() == 16);
    CHECK(y->value.at4(0, 0, 0, 0) == 1.0f);
    CHECK(y->value.at4(0, 0, 0, 1) == 1.0f);
    CHECK(y->value.at4(0, 0, 1, 1) == 1.0f);
    CHECK(y->value.at4(0, 0, 2, 3) == 4.0f);
    const Tensor wts = Tensor::full({1, 1, 4, 4}, 1.0f);
    g.backward(weighted_mean(g, y, wts));
    for (int i = 0; i < 4; ++i) CHECK(x->grad[i] == doctest::Approx(4.0 / 16.0));
}

TEST_CASE("channel concat stacks inputs and splits gradients") {
    RandomSource rng(19);
    Graph g;
    Tensor av = random_tensor({2, 2, 3, 3}, rng), bv = random_tensor({2, 1, 3, 3}, rng);
    auto a = g.leaf(av, true), b = g.leaf(bv, true);
    auto y = concat_channels(g, {a, b});
    CHECK(y->value.dim(1) == 3);
    CHECK(y->value.at4(1, 2, 0, 0) == bv.at4(1, 0, 0, 0));
    CHECK(y->value.at4(0, 1, 2, 2) == av.at4(0, 1, 2, 2));

    Tensor wts = random_tensor({2, 3, 3, 3}, rng, 0.3);
    g.backward(weighted_mean(g, y, wts));
    const int64_t hw = 9;
    CHECK(a->grad.at4(0, 0, 0, 0) == doctest::Approx(wts.at4(0, 0, 0, 0) / (2 * 3 * hw)));
    CHECK(b->grad.at4(1, 0, 1, 1) == doctest::Approx(wts.at4(1, 2, 1, 1) / (2 * 3 * hw)));

    CHECK_THROWS_AS(concat_channels(g, {}), DimensionError);
    CHECK_THROWS_AS(concat_channels(g, {a, g.leaf(Tensor::zeros({2, 1, 4, 3}))}), DimensionError);
}

TEST_CASE("activation values and gradients") {
    RandomSource rng(20);
    Tensor xv = random_tensor({1, 2, 3, 4}, rng, 1.5);
    for (int64_t i = 0; i < xv.size(); ++i)
        if (std::abs(xv[i]) < 0.05) xv[i] = 0.5f;  // keep clear of relu kinks
    Tensor wts = random_tensor({1, 2, 3, 4}, rng, 0.3);

    struct Case {
        const char* name;
        std::function<NodeRef(Graph&, const NodeRef&)> op;
        std::function<double(double)> ref;
    };
    const std::vector<Case> cases = {
        {"relu", [](Graph& g, const NodeRef& x) { return relu(g, x); },
         [](double v) { return v > 0 ? v : 0.0; }},
        {"leaky", [](Graph& g, const NodeRef& x) { return leaky_relu(g, x, 0.2); },
         [](double v) { return v > 0 ? v : 0.2 * v; }},
        {"tanh", [](Graph& g, const NodeRef& x) { return tanh_act(g, x); },
         [](double v) { return std::tanh(v); }},
        {"sigmoid", [](Graph& g, const NodeRef& x) { return sigmoid(g, x); },
         [](double v) { return 1.0 / (1.0 + std::exp(-v)); }},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        Graph g;
        auto x = g.leaf(xv, true);
        auto y = c.op(g, x);
        for (int64_t i = 0; i < xv.size(); ++i)
            CHECK(y->value[i] == doctest::Approx(c.ref(xv[i])).epsilon(1e-5));
        g.backward(weighted_mean(g, y, wts));
        Tensor gx = x->grad;
        auto eval = [&]() {
            Graph h2(true, false);
            return scalar_value(weighted_mean(h2, c.op(h2, h2.leaf(xv)), wts));
        };
        CHECK(fd_check(xv, gx, eval, 5e-3) < 5e-3);
    }
}

TEST_CASE("mean absolute difference value and gradient") {
    Graph g;
    Tensor av = Tensor::from_values({1, 1, 1, 4}, {1.0f, -2.0f, 3.0f, 0.5f});
    Tensor bv = Tensor::from_values({1, 1, 1, 4}, {0.0f, 1.0f, 5.0f, 0.25f});
    auto a = g.leaf(av, true), b = g.leaf(bv, true);
    auto loss = l1_mean(g, a, b);
    CHECK(scalar_value(loss) == doctest::Approx((1.0 + 3.0 + 2.0 + 0.25) / 4));
    g.backward(loss);
    CHECK(a->grad[0] == doctest::Approx(0.25));
    CHECK(a->grad[1] == doctest::Approx(-0.25));
    CHECK(a->grad[2] == doctest::Approx(-0.25));
    CHECK(b->grad[0] == doctest::Approx(-0.25));
    CHECK(b->grad[2] == doctest::Approx(0.25));
}

TEST_CASE("cross-entropy terms clamp scores and zero the slope outside") {
    const double eps = kScoreClampEps;
    {
        Graph g;
        auto s = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.5f, 0.25f}), true);
        auto loss = bce_term(g, s, true, eps);
        CHECK(scalar_value(loss) ==
              doctest::Approx(0.5 * (-std::log(0.5) - std::log(0.25))));
        g.backward(loss);
        CHECK(s->grad[0] == doctest::Approx(-0.5 / 0.5));
        CHECK(s->grad[1] == doctest::Approx(-0.5 / 0.25));
    }
    {
        Graph g;
        auto s = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.5f, 0.75f}), true);
        auto loss = bce_term(g, s, false, eps);
        CHECK(scalar_value(loss) ==
              doctest::Approx(0.5 * (-std::log(0.5) - std::log(0.25))));
        g.backward(loss);
        CHECK(s->grad[0] == doctest::Approx(0.5 / 0.5));
        CHECK(s->grad[1] == doctest::Approx(0.5 / 0.25));
    }
    {
        // scores at the boundary stay finite and contribute no gradient
        Graph g;
        auto s = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.0f, 1.0f}), true);
        auto loss = bce_term(g, s, true, eps);
        CHECK(std::isfinite(scalar_value(loss)));
        CHECK(scalar_value(loss) == doctest::Approx(0.5 * -std::log(eps)).epsilon(1e-3));
        g.backward(loss);
        CHECK(s->grad[0] == 0.0f);
    }
}
