#pragma once
/// @file variants.hpp
/// The fusion-variant comparison: one row per variant, each trained and
/// evaluated under identical settings across several seeds.

#include <string>
#include <vector>

#include "hinet/inference.hpp"
#include "hinet/model_config.hpp"
#include "hinet/trainer.hpp"

namespace hinet {

struct VariantSpec {
    FusionVariant kind;
    std::string name;
    std::string description;
};

/// All six compared variants, in table order (hybrid first).
const std::vector<VariantSpec>& all_variants();

/// Base config with the fusion variant applied.
ModelConfig variant_config(ModelConfig base, FusionVariant v);

/// One (variant, seed) training + evaluation attempt.
struct AblationRun {
    std::string variant;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;  // failure reason when !ok
    EvalSummary eval;   // per-slice metrics on the held-out split
};

/// Variant row with per-slice metrics pooled over its successful runs.
struct AblationRow {
    std::string variant;
    MetricStats psnr, nmse, ssim;
    int runs_ok = 0;
    int runs_total = 0;
};

struct AblationResult {
    std::vector<AblationRun> runs;  // variant-major, then seed
    std::vector<AblationRow> rows;  // one per variant, table order
};

struct AblationOptions {
    std::vector<uint64_t> seeds = {1, 2, 3};
    /// Subset of variant names to run; empty means all six.
    std::vector<std::string> variants;
};

/// Trains every requested (variant, seed) pair on the manifest's train
/// split and evaluates on the held-out split.  A failed run is recorded as
/// a gap in its row instead of aborting the sweep.  Artifacts land under
/// <run_dir>/<variant>/seed_<s>/ (loss log, final checkpoint, slice CSV).
AblationResult run_ablation(const std::string& data_root, const ModelConfig& base_model,
                            const TrainConfig& base_train, const AblationOptions& opt,
                            const std::string& run_dir);

}  // namespace hinet
