#include "hinet/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hinet/objectives.hpp"

namespace fs = std::filesystem;

namespace hinet {

void TrainConfig::validate() const {
    HINET_CHECK(epochs >= 1, ConfigError, "epochs must be >= 1, got ", epochs);
    HINET_CHECK(decay_start_epoch >= 1 && decay_start_epoch <= epochs, ConfigError,
                "decay_start_epoch must lie in [1, epochs], got ", decay_start_epoch);
    HINET_CHECK(base_lr > 0.0, ConfigError, "base_lr must be positive, got ", base_lr);
    HINET_CHECK(lambda1 >= 0.0 && lambda2 >= 0.0, ConfigError,
                "loss weights must be non-negative");
    HINET_CHECK(batch_size >= 1, ConfigError, "batch_size must be >= 1, got ", batch_size);
    HINET_CHECK(checkpoint_every >= 0, ConfigError, "checkpoint_every must be >= 0");
    HINET_CHECK(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
                ConfigError, "adam betas must lie in [0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"epochs", epochs},
            {"decay_start_epoch", decay_start_epoch},
            {"base_lr", base_lr},
            {"lambda1", lambda1},
            {"lambda2", lambda2},
            {"adam_beta1", adam_beta1},
            {"adam_beta2", adam_beta2},
            {"batch_size", batch_size},
            {"seed", seed},
            {"strict_minimax_adv", strict_minimax_adv},
            {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
        if (j.contains("decay_start_epoch"))
            c.decay_start_epoch = j.at("decay_start_epoch").get<int>();
        if (j.contains("base_lr")) c.base_lr = j.at("base_lr").get<double>();
        if (j.contains("lambda1")) c.lambda1 = j.at("lambda1").get<double>();
        if (j.contains("lambda2")) c.lambda2 = j.at("lambda2").get<double>();
        if (j.contains("adam_beta1")) c.adam_beta1 = j.at("adam_beta1").get<double>();
        if (j.contains("adam_beta2")) c.adam_beta2 = j.at("adam_beta2").get<double>();
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
        if (j.contains("strict_minimax_adv"))
            c.strict_minimax_adv = j.at("strict_minimax_adv").get<bool>();
        if (j.contains("checkpoint_every"))
            c.checkpoint_every = j.at("checkpoint_every").get<int>();
    } catch (const nlohmann::json::exception& e) {
        fail<ConfigError>("bad train config: ", e.what());
    }
    c.validate();
    return c;
}

double lr_schedule(const TrainConfig& cfg, int epoch) {
    HINET_CHECK(epoch >= 1 && epoch <= cfg.epochs, ConfigError, "epoch ", epoch,
                " outside [1, ", cfg.epochs, "]");
    if (epoch <= cfg.decay_start_epoch) return cfg.base_lr;
    // Ratio first: the endpoints come out exact in floating point.
    const double ratio = static_cast<double>(cfg.epochs - epoch) /
                         static_cast<double>(cfg.epochs - cfg.decay_start_epoch);
    return cfg.base_lr * ratio;
}

Batch assemble_batch(const std::vector<Sample>& samples, const std::vector<size_t>& idx) {
    HINET_CHECK(!idx.empty(), DimensionError, "batch index list is empty");
    const int rows = samples[idx[0]].y.dim(0), cols = samples[idx[0]].y.dim(1);
    const int n = static_cast<int>(idx.size());
    Batch b{Tensor({n, 1, rows, cols}), Tensor({n, 1, rows, cols}), Tensor({n, 1, rows, cols})};
    const int64_t plane = static_cast<int64_t>(rows) * cols;
    for (int i = 0; i < n; ++i) {
        const Sample& s = samples[idx[static_cast<size_t>(i)]];
        HINET_CHECK(s.x1.dim(0) == rows && s.x1.dim(1) == cols, DimensionError,
                    "batch mixes sample sizes");
        std::copy(s.x1.data(), s.x1.data() + plane, b.x1.data() + i * plane);
        std::copy(s.x2.data(), s.x2.data() + plane, b.x2.data() + i * plane);
        std::copy(s.y.data(), s.y.data() + plane, b.y.data() + i * plane);
    }
    return b;
}

Trainer::Trainer(HiNetModel& model, TrainConfig cfg)
    : model_(model), cfg_(std::move(cfg)),
      adam_g_(generator_side_params(model.params()), cfg_.adam_beta1, cfg_.adam_beta2),
      adam_d_(discriminator_params(model.params()), cfg_.adam_beta1, cfg_.adam_beta2) {
    cfg_.validate();
}

Trainer::Trainer(HiNetModel& model, TrainConfig cfg, const LoadedCheckpoint& ckpt)
    : Trainer(model, std::move(cfg)) {
    restore_model(model_, ckpt);
    try {
        epoch_done_ = ckpt.meta.at("epoch").get<int>();
        step_ = ckpt.meta.at("global_step").get<int64_t>();
        restore_optimizer(adam_g_, "opt_g.", ckpt, ckpt.meta.at("adam_g_steps").get<int64_t>());
        restore_optimizer(adam_d_, "opt_d.", ckpt, ckpt.meta.at("adam_d_steps").get<int64_t>());
    } catch (const nlohmann::json::exception& e) {
        fail<DataError>("checkpoint lacks trainer state (", e.what(),
                        "); was it saved by a training run?");
    }
}

Trainer Trainer::resumed(HiNetModel& model, const std::string& ckpt_path) {
    const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    HINET_CHECK(ckpt.meta.contains("train_config"), DataError,
                "checkpoint has no train_config; cannot resume from ", ckpt_path);
    return Trainer(model, TrainConfig::from_json(ckpt.meta.at("train_config")), ckpt);
}

void Trainer::restore_optimizer(Adam& adam, const std::string& prefix,
                                const LoadedCheckpoint& ckpt, int64_t t) {
    adam.set_step_count(t);
    for (size_t i = 0; i < adam.params().size(); ++i) {
        const std::string& name = adam.params()[i].name;
        for (const char* slot : {".m", ".v"}) {
            auto it = ckpt.extra.find(prefix + name + slot);
            HINET_CHECK(it != ckpt.extra.end(), DataError,
                        "checkpoint missing optimizer state for '", name, "'");
            Tensor& dst = slot[1] == 'm' ? adam.slot_m(i) : adam.slot_v(i);
            check_same_shape(dst, it->second, "optimizer state '" + name + "'");
            dst = it->second;
        }
    }
}

void Trainer::save_trainer_checkpoint(const std::string& path) const {
    std::vector<NamedTensor> extra;
    auto dump = [&extra](const Adam& adam, const std::string& prefix) {
        for (size_t i = 0; i < adam.params().size(); ++i) {
            const std::string& name = adam.params()[i].name;
            extra.push_back({prefix + name + ".m", "extra", const_cast<Adam&>(adam).slot_m(i)});
            extra.push_back({prefix + name + ".v", "extra", const_cast<Adam&>(adam).slot_v(i)});
        }
    };
    dump(adam_g_, "opt_g.");
    dump(adam_d_, "opt_d.");
    const nlohmann::json meta = {{"epoch", epoch_done_},
                                 {"global_step", step_},
                                 {"adam_g_steps", adam_g_.step_count()},
                                 {"adam_d_steps", adam_d_.step_count()},
                                 {"train_config", cfg_.to_json()}};
    save_checkpoint(path, model_, extra, meta);
}

StepLosses Trainer::train_step(const Batch& batch, double lr, StepObserver* obs) {
    check_same_shape(batch.x1, batch.x2, "batch sources");
    check_same_shape(batch.x1, batch.y, "batch target");

    // Generator-side graph: synthesis forward plus reconstructions.
    Graph gg(true, true);
    NodeRef x1 = gg.leaf(batch.x1), x2 = gg.leaf(batch.x2), y = gg.leaf(batch.y);
    const auto gen = model_.generator_forward(gg, x1, x2);
    NodeRef recon;
    if (model_.has_decoders()) {
        NodeRef r1 = model_.decoder_forward(gg, gen.p1.latent(), 0);
        NodeRef r2 = model_.decoder_forward(gg, gen.p2.latent(), 1);
        recon = reconstruction_loss(gg, {{x1, r1}, {x2, r2}});
    } else {
        recon = scalar_const(gg, 0.0);
    }

    // Discriminator update on real vs detached fake.
    Graph gd(true, true);
    NodeRef dx1 = gd.leaf(batch.x1), dx2 = gd.leaf(batch.x2), dy = gd.leaf(batch.y);
    NodeRef fake_detached = gd.leaf(gen.yhat->value);
    NodeRef d_real = model_.discriminator_forward(gd, dx1, dx2, dy);
    NodeRef d_fake = model_.discriminator_forward(gd, dx1, dx2, fake_detached);
    NodeRef l_d = discriminator_objective(gd, d_real, d_fake);
    model_.params().zero_grads("disc.");
    gd.backward(l_d);
    adam_d_.step(lr);
    if (obs) obs->after_discriminator_update();

    // Generator update through the freshly updated discriminator.
    NodeRef d_fake_g = model_.discriminator_forward(gg, x1, x2, gen.yhat);
    const GeneratorLossParts parts =
        generator_objective(gg, d_fake_g, gen.yhat, y, cfg_.lambda1, cfg_.strict_minimax_adv);
    NodeRef total = scalar_add(gg, parts.total, scalar_scale(gg, recon, cfg_.lambda2));
    for (const auto& p : model_.params().params())
        if (p.name.rfind("disc.", 0) != 0 && !p.node->grad.empty()) p.node->grad.fill(0.0f);
    gg.backward(total);
    adam_g_.step(lr);
    if (obs) obs->after_generator_update();

    StepLosses losses{scalar_value(recon),      scalar_value(parts.adv),
                      scalar_value(parts.l1),   scalar_value(parts.total),
                      scalar_value(total),      scalar_value(l_d)};
    for (double v : {losses.recon, losses.g_adv, losses.g_l1, losses.g_gan, losses.g_total,
                     losses.d_total})
        HINET_CHECK(std::isfinite(v), NumericError, "non-finite loss at global step ", step_ + 1,
                    " (recon=", losses.recon, " g_adv=", losses.g_adv, " g_l1=", losses.g_l1,
                    " d=", losses.d_total, ")");
    return losses;
}

void Trainer::fit(const std::vector<Sample>& train_samples, const std::string& run_dir) {
    HINET_CHECK(!train_samples.empty(), DataError, "no training samples");
    fs::create_directories(run_dir);
    const std::string log_path = (fs::path(run_dir) / "loss_log.csv").string();
    const bool fresh = !fs::exists(log_path);
    std::ofstream log(log_path, std::ios::app);
    HINET_CHECK(log.good(), IoError, "cannot open loss log: ", log_path);
    if (fresh)
        log << "epoch,step,lr,recon,g_adv,g_l1,g_gan,g_total,d_total\n";

    std::vector<size_t> order(train_samples.size());
    for (int epoch = epoch_done_ + 1; epoch <= cfg_.epochs; ++epoch) {
        const double lr = lr_schedule(cfg_, epoch);
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        RandomSource epoch_rng(seed_mix(cfg_.seed, static_cast<uint64_t>(epoch)));
        epoch_rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg_.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
            const std::vector<size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
            const StepLosses l = train_step(assemble_batch(train_samples, idx), lr);
            ++step_;
            char row[320];
            std::snprintf(row, sizeof(row),
                          "%d,%" PRId64 ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", epoch,
                          step_, lr, l.recon, l.g_adv, l.g_l1, l.g_gan, l.g_total, l.d_total);
            log << row;
        }
        log.flush();
        epoch_done_ = epoch;
        const bool periodic = cfg_.checkpoint_every > 0 && epoch % cfg_.checkpoint_every == 0;
        if (periodic || epoch == cfg_.epochs) {
            const std::string name = "ckpt_epoch_" + std::to_string(epoch) + ".ckpt";
            save_trainer_checkpoint((fs::path(run_dir) / name).string());
        }
    }
}

}  // namespace hinet
