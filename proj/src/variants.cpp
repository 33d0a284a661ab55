#include "hinet/variants.hpp"

#include <filesystem>

#include "hinet/model.hpp"
#include "hinet/report.hpp"

namespace fs = std::filesystem;

namespace hinet {

const std::vector<VariantSpec>& all_variants() {
    static const std::vector<VariantSpec> table = {
        {FusionVariant::Hybrid, "hybrid",
         "modality-specific autoencoders, MFB fusion network, MFB generator"},
        {FusionVariant::EarlyFusion, "early_fusion",
         "sources channel-concatenated into a single encoder"},
        {FusionVariant::LateFusion, "late_fusion",
         "latents concatenated once before the generator"},
        {FusionVariant::ConcatD1, "concate_d1",
         "concatenation blocks in both fusion network and generator"},
        {FusionVariant::ConcatD2, "concate_d2",
         "MFB fusion network, concatenation generator blocks"},
        {FusionVariant::ConcatD3, "concate_d3",
         "concatenation fusion network, MFB generator blocks"},
    };
    return table;
}

ModelConfig variant_config(ModelConfig base, FusionVariant v) {
    base.fusion_variant = v;
    return base;
}

namespace {

std::vector<const VariantSpec*> select_variants(const std::vector<std::string>& names) {
    std::vector<const VariantSpec*> out;
    if (names.empty()) {
        for (const auto& v : all_variants()) out.push_back(&v);
        return out;
    }
    for (const auto& n : names) {
        const FusionVariant kind = variant_from_name(n);  // validates the name
        for (const auto& v : all_variants())
            if (v.kind == kind) out.push_back(&v);
    }
    return out;
}

}  // namespace

AblationResult run_ablation(const std::string& data_root, const ModelConfig& base_model,
                            const TrainConfig& base_train, const AblationOptions& opt,
                            const std::string& run_dir) {
    HINET_CHECK(!opt.seeds.empty(), ConfigError, "ablation needs at least one seed");
    const DatasetManifest manifest =
        load_manifest((fs::path(data_root) / "manifest.json").string());
    HINET_CHECK(!manifest.split.val.empty(), DataError,
                "ablation needs a non-empty held-out split");

    SampleOptions sample_opt;
    sample_opt.patch = base_model.input_rows;
    const std::vector<Sample> train_samples =
        build_samples(data_root, manifest.split.train, manifest.task, sample_opt);
    const std::vector<Sample> val_samples =
        build_samples(data_root, manifest.split.val, manifest.task, sample_opt);

    AblationResult result;
    for (const VariantSpec* spec : select_variants(opt.variants)) {
        AblationRow row;
        row.variant = spec->name;
        std::vector<double> psnr_pool, nmse_pool, ssim_pool;
        for (uint64_t seed : opt.seeds) {
            AblationRun run;
            run.variant = spec->name;
            run.seed = seed;
            const fs::path sub = fs::path(run_dir) / spec->name / ("seed_" + std::to_string(seed));
            try {
                fs::create_directories(sub);
                ModelConfig mc = variant_config(base_model, spec->kind);
                mc.validate();
                TrainConfig tc = base_train;
                tc.seed = seed;
                tc.validate();
                HiNetModel model(mc, seed);
                Trainer trainer(model, tc);
                trainer.fit(train_samples, sub.string());
                run.eval = aggregate_evaluate(model, val_samples);
                write_slice_csv((sub / "eval_slices.csv").string(), run.eval.slices);
                run.ok = true;
            } catch (const std::exception& e) {
                run.ok = false;
                run.error = e.what();
            }
            if (run.ok) {
                for (const auto& s : run.eval.slices) {
                    psnr_pool.push_back(s.psnr);
                    nmse_pool.push_back(s.nmse);
                    ssim_pool.push_back(s.ssim);
                }
                row.runs_ok += 1;
            }
            row.runs_total += 1;
            result.runs.push_back(std::move(run));
        }
        row.psnr = aggregate_stats(psnr_pool);
        row.nmse = aggregate_stats(nmse_pool);
        row.ssim = aggregate_stats(ssim_pool);
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace hinet
