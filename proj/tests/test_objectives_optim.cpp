#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "hinet/model.hpp"
#include "hinet/objectives.hpp"
#include "hinet/optim.hpp"
#include "hinet/trainer.hpp"
#include "test_support.hpp"

using namespace hinet;
using hinet::testing::random_tensor;

TEST_CASE("reconstruction objective sums per-modality mean deviations") {
    Graph g;
    auto x1 = g.leaf(Tensor::from_values({1, 1, 1, 2}, {1.0f, 2.0f}), false);
    auto r1 = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.0f, 2.5f}), true);
    auto x2 = g.leaf(Tensor::from_values({1, 1, 1, 2}, {-1.0f, 0.0f}), false);
    auto r2 = g.leaf(Tensor::from_values({1, 1, 1, 2}, {1.0f, 0.0f}), true);
    auto loss = reconstruction_loss(g, {{x1, r1}, {x2, r2}});
    CHECK(scalar_value(loss) == doctest::Approx(0.5 * (1.0 + 0.5) + 0.5 * 2.0));
    g.backward(loss);
    CHECK(r1->grad[0] == doctest::Approx(-0.5));  // xhat below x pulls up
    CHECK(r2->grad[0] == doctest::Approx(0.5));
}

TEST_CASE("generator objective combines adversarial and similarity terms") {
    Graph g;
    auto d_fake = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.25f, 0.5f}), false);
    auto yhat = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.0f, 0.5f}), false);
    auto y = g.leaf(Tensor::from_values({1, 1, 1, 2}, {1.0f, 0.5f}), false);

    auto parts = generator_objective(g, d_fake, yhat, y, 100.0, false);
    const double adv = 0.5 * (-std::log(0.25) - std::log(0.5));
    CHECK(scalar_value(parts.adv) == doctest::Approx(adv));
    CHECK(scalar_value(parts.l1) == doctest::Approx(0.5));
    CHECK(scalar_value(parts.total) == doctest::Approx(adv + 100.0 * 0.5));
}

TEST_CASE("strict adversarial form minimizes the complement log directly") {
    Graph g;
    auto d_fake = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.25f, 0.5f}), true);
    auto yhat = g.leaf(Tensor::zeros({1, 1, 1, 2}), false);
    auto y = g.leaf(Tensor::zeros({1, 1, 1, 2}), false);
    auto parts = generator_objective(g, d_fake, yhat, y, 0.0, true);
    // mean log(1 - s): negative, and pushing scores up lowers it
    CHECK(scalar_value(parts.adv) ==
          doctest::Approx(0.5 * (std::log(0.75) + std::log(0.5))));
    g.backward(parts.total);
    CHECK(d_fake->grad[0] < 0.0f);
    CHECK(d_fake->grad[1] < 0.0f);

    // the two adversarial forms drive scores the same direction
    Graph g2;
    auto d2 = g2.leaf(Tensor::from_values({1, 1, 1, 2}, {0.25f, 0.5f}), true);
    auto parts2 = generator_objective(g2, d2, yhat, y, 0.0, false);
    g2.backward(parts2.total);
    CHECK(d2->grad[0] < 0.0f);
    // but with different magnitudes away from the fixed point
    CHECK(std::abs(d2->grad[0]) != doctest::Approx(std::abs(d_fake->grad[0])));
}

TEST_CASE("discriminator objective rewards real-high fake-low score maps") {
    Graph g;
    auto d_real = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.9f, 0.8f}), true);
    auto d_fake = g.leaf(Tensor::from_values({1, 1, 1, 2}, {0.1f, 0.3f}), true);
    auto loss = discriminator_objective(g, d_real, d_fake);
    const double expect = 0.5 * (-std::log(0.9) - std::log(0.8)) +
                          0.5 * (-std::log(0.9) - std::log(0.7));
    CHECK(scalar_value(loss) == doctest::Approx(expect));
    g.backward(loss);
    CHECK(d_real->grad[0] < 0.0f);  // raise real scores
    CHECK(d_fake->grad[0] > 0.0f);  // lower fake scores
}

TEST_CASE("adaptive moment updates match a double-precision reference") {
    ParamStore store;
    auto p = store.add_param("p", Tensor::from_values({3}, {1.0f, -2.0f, 0.5f}));
    Adam adam(store.params(), 0.5, 0.999, 1e-8);

    // fixed gradients per step
    const std::vector<std::vector<double>> grads = {
        {0.1, -0.2, 0.3}, {-0.05, 0.4, 0.0}, {0.2, 0.2, -0.1}};
    std::vector<double> ref = {1.0, -2.0, 0.5}, m(3, 0.0), v(3, 0.0);
    const double b1 = 0.5, b2 = 0.999, eps = 1e-8, lr = 1e-3;

    for (size_t t = 1; t <= grads.size(); ++t) {
        Tensor& g = p->ensure_grad();
        for (int i = 0; i < 3; ++i) g[i] = static_cast<float>(grads[t - 1][i]);
        adam.step(lr);
        for (int i = 0; i < 3; ++i) {
            const double gi = grads[t - 1][i];
            m[i] = b1 * m[i] + (1 - b1) * gi;
            v[i] = b2 * v[i] + (1 - b2) * gi * gi;
            const double mhat = m[i] / (1 - std::pow(b1, static_cast<double>(t)));
            const double vhat = v[i] / (1 - std::pow(b2, static_cast<double>(t)));
            ref[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            CHECK(p->value[i] == doctest::Approx(ref[i]).epsilon(1e-6));
        }
        g.fill(0.0f);
    }
    CHECK(adam.step_count() == 3);
}

TEST_CASE("learning rate holds then decays linearly to zero") {
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.decay_start_epoch = 100;
    cfg.base_lr = 2e-4;
    CHECK(lr_schedule(cfg, 1) == 0.0002);
    CHECK(lr_schedule(cfg, 50) == 0.0002);
    CHECK(lr_schedule(cfg, 100) == 0.0002);
    CHECK(lr_schedule(cfg, 200) == 0.0001);
    CHECK(lr_schedule(cfg, 300) == 0.0);
    CHECK(lr_schedule(cfg, 150) == doctest::Approx(1.5e-4));
    CHECK(lr_schedule(cfg, 299) > 0.0);

    TrainConfig flat;
    flat.epochs = 10;
    flat.decay_start_epoch = 10;
    CHECK(lr_schedule(flat, 10) == flat.base_lr);
}

TEST_CASE("training configuration validation") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.decay_start_epoch = 400;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.base_lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("optimizer partition splits scoring and synthesis parameters") {
    ModelConfig cfg;
    cfg.input_rows = cfg.input_cols = 32;
    HiNetModel model(cfg, 3);
    const auto d = discriminator_params(model.params());
    const auto g = generator_side_params(model.params());
    CHECK(!d.empty());
    CHECK(!g.empty());
    CHECK(d.size() + g.size() == model.params().param_names().size());
    std::set<std::string> dn, gn;
    for (const auto& e : d) {
        dn.insert(e.name);
        CHECK(e.name.rfind("disc.", 0) == 0);
    }
    for (const auto& e : g) {
        gn.insert(e.name);
        CHECK(e.name.rfind("disc.", 0) != 0);
    }
    for (const auto& n : dn) CHECK(gn.count(n) == 0);
}
