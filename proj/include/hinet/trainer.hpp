#pragma once
/// @file trainer.hpp
/// Adversarial training loop: per batch one discriminator update on
/// (real, detached fake), then one generator update whose objective adds the
/// adversarial term, the weighted synthesis L1, and the weighted
/// reconstruction loss.

#include <string>
#include <vector>

#include "hinet/checkpoint.hpp"
#include "hinet/model.hpp"
#include "hinet/optim.hpp"
#include "hinet/pipeline.hpp"

namespace hinet {

struct TrainConfig {
    int epochs = 300;
    int decay_start_epoch = 100;  // last epoch at the base rate
    double base_lr = 2e-4;
    double lambda1 = 100.0;  // synthesis L1 weight
    double lambda2 = 20.0;   // reconstruction weight
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int batch_size = 4;
    uint64_t seed = 0;
    bool strict_minimax_adv = false;
    int checkpoint_every = 0;  // extra checkpoints every k epochs; final always

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Constant at base_lr through decay_start_epoch, then linear to zero:
/// lr(e) = base_lr * (epochs - e) / (epochs - decay_start_epoch).
/// Epochs are 1-based; lr(epochs) == 0 exactly.
double lr_schedule(const TrainConfig& cfg, int epoch);

struct StepLosses {
    double recon;    ///< sum of per-modality reconstruction L1 means
    double g_adv;    ///< generator adversarial term
    double g_l1;     ///< mean |y - yhat|
    double g_gan;    ///< g_adv + lambda1 * g_l1
    double g_total;  ///< g_gan + lambda2 * recon (the minimized objective)
    double d_total;  ///< discriminator objective
};

struct Batch {
    Tensor x1, x2, y;  // (n, 1, rows, cols)
};

Batch assemble_batch(const std::vector<Sample>& samples, const std::vector<size_t>& idx);

/// Test hook into the two phases of a training step.
class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void after_discriminator_update() {}
    virtual void after_generator_update() {}
};

class Trainer {
public:
    Trainer(HiNetModel& model, TrainConfig cfg);

    /// Resumes from a trainer checkpoint; the model must have been built
    /// from the checkpoint's stored model config.
    static Trainer resumed(HiNetModel& model, const std::string& ckpt_path);

    StepLosses train_step(const Batch& batch, double lr, StepObserver* obs = nullptr);

    /// Runs remaining epochs, appending one loss-log row per step to
    /// <run_dir>/loss_log.csv and writing <run_dir>/ckpt_epoch_<k>.ckpt.
    void fit(const std::vector<Sample>& train_samples, const std::string& run_dir);

    void save_trainer_checkpoint(const std::string& path) const;

    const TrainConfig& config() const { return cfg_; }
    int completed_epochs() const { return epoch_done_; }
    int64_t global_step() const { return step_; }
    HiNetModel& model() { return model_; }

private:
    Trainer(HiNetModel& model, TrainConfig cfg, const LoadedCheckpoint& ckpt);
    void restore_optimizer(Adam& adam, const std::string& prefix, const LoadedCheckpoint& ckpt,
                           int64_t t);

    HiNetModel& model_;
    TrainConfig cfg_;
    Adam adam_g_, adam_d_;
    int epoch_done_ = 0;
    int64_t step_ = 0;
};

}  // namespace hinet
