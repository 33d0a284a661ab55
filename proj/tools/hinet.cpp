// Command-line front end: dataset preparation, phantom generation, training,
// synthesis, evaluation, the fusion-variant comparison, and report rendering.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hinet/checkpoint.hpp"
#include "hinet/inference.hpp"
#include "hinet/model.hpp"
#include "hinet/phantom.hpp"
#include "hinet/report.hpp"
#include "hinet/run_manifest.hpp"
#include "hinet/trainer.hpp"
#include "hinet/util.hpp"
#include "hinet/variants.hpp"

namespace fs = std::filesystem;
using namespace hinet;

namespace {

// Shared option bundle; each subcommand registers the subset it honors.
struct CliOptions {
    std::string config_path;
    std::string run_dir;
    std::string data_root;
    std::string checkpoint;
    std::string resume;
    std::string out_path;
    std::string subject;
    std::string variant;
    std::string split = "val";
    std::string source1, source2, target;
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::vector<std::string> variants;
    uint64_t seed = 0;
    int epochs = 0;
    int decay_start = 0;
    int input_size = 0;
    int batch_size = 0;
    double lr = 0.0;
    double train_fraction = 0.8;
    bool strict_minimax = false;
    bool skip_empty = false;
    int grid_rows = 8;
    int subjects = 6, slices = 4, rows = 240, cols = 240;
};

// True when the subcommand both registers and received the option.
bool given(const CLI::App* sub, const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

void apply_task_overrides(TaskSpec& task, const CLI::App* sub, const CliOptions& o) {
    if (given(sub, "--source1")) task.source1 = o.source1;
    if (given(sub, "--source2")) task.source2 = o.source2;
    if (given(sub, "--target")) task.target = o.target;
    task.validate();
}

void add_task_options(CLI::App* sub, CliOptions& o) {
    sub->add_option("--source1", o.source1, "first source modality");
    sub->add_option("--source2", o.source2, "second source modality");
    sub->add_option("--target", o.target, "modality to synthesize");
}

RunManifest manifest_from_config(const std::string& config_path, const std::string& command) {
    RunManifest m;
    if (!config_path.empty()) m = load_run_manifest(config_path);
    m.command = command;
    return m;
}

void apply_train_overrides(RunManifest& m, const CLI::App* sub, const CliOptions& o) {
    if (given(sub, "--data")) m.data_root = o.data_root;
    if (given(sub, "--seed")) m.train.seed = o.seed;
    if (given(sub, "--epochs")) m.train.epochs = o.epochs;
    if (given(sub, "--decay-start")) m.train.decay_start_epoch = o.decay_start;
    // Shrinking the run below the decay start without repositioning it means
    // a constant learning rate for the whole run.
    if (given(sub, "--epochs") && !given(sub, "--decay-start") &&
        m.train.decay_start_epoch > m.train.epochs)
        m.train.decay_start_epoch = m.train.epochs;
    if (given(sub, "--batch-size")) m.train.batch_size = o.batch_size;
    if (given(sub, "--lr")) m.train.base_lr = o.lr;
    if (given(sub, "--input-size")) {
        m.model.input_rows = o.input_size;
        m.model.input_cols = o.input_size;
    }
    if (given(sub, "--strict-minimax-adv")) m.train.strict_minimax_adv = true;
    if (given(sub, "--variant"))
        m.model.fusion_variant = variant_from_name(o.variant);
    m.variant = variant_name(m.model.fusion_variant);
}

DatasetManifest require_dataset_manifest(const std::string& data_root) {
    HINET_CHECK(!data_root.empty(), ConfigError,
                "no dataset root; pass --data or set data_root in the config");
    return load_manifest((fs::path(data_root) / "manifest.json").string());
}

Volume volume_from_image(const Tensor& img) {
    Volume v(1, img.dim(0), img.dim(1));
    std::copy(img.data(), img.data() + img.size(), v.data.data());
    return v;
}

// ---------------------------------------------------------------------------

void run_phantom_gen(const CLI::App* sub, const CliOptions& o) {
    PhantomOptions popt;
    popt.subjects = o.subjects;
    popt.slices = o.slices;
    popt.rows = o.rows;
    popt.cols = o.cols;
    popt.seed = o.seed;
    popt.train_fraction = o.train_fraction;

    RunManifest m;
    m.command = "phantom-gen";
    m.data_root = o.data_root;
    m.train.seed = o.seed;
    finalize_manifest(m);
    const std::string run_dir = o.run_dir.empty() ? o.data_root : o.run_dir;
    write_run_manifest(run_dir, m);

    const DatasetManifest dm = make_phantom_dataset(o.data_root, popt);
    (void)sub;
    std::printf("wrote %zu phantom subjects under %s (%zu train / %zu val)\n",
                dm.subjects.size(), o.data_root.c_str(), dm.split.train.size(),
                dm.split.val.size());
}

void run_prepare_data(const CLI::App* sub, const CliOptions& o) {
    DatasetManifest dm;
    dm.task = TaskSpec{};
    apply_task_overrides(dm.task, sub, o);
    dm.subjects = list_subjects(o.data_root);
    dm.train_fraction = o.train_fraction;
    dm.split_seed = o.seed;
    dm.split = split_subjects(dm.subjects, o.train_fraction, o.seed);

    RunManifest m;
    m.command = "prepare-data";
    m.data_root = o.data_root;
    m.task = dm.task;
    m.train.seed = o.seed;
    finalize_manifest(m);
    const std::string run_dir = o.run_dir.empty() ? o.data_root : o.run_dir;
    write_run_manifest(run_dir, m);

    // Every subject must provide the task modalities; record the modalities
    // common to all subjects.
    for (const auto& s : dm.subjects)
        for (const auto& mod : {dm.task.source1, dm.task.source2, dm.task.target})
            modality_path(o.data_root, s, mod);
    std::vector<std::string> common;
    for (const auto& entry : fs::directory_iterator(fs::path(o.data_root) / dm.subjects[0])) {
        std::string name = entry.path().filename().string();
        for (const char* ext : {".hinv", ".nii.gz", ".nii"}) {
            const std::string e(ext);
            if (name.size() > e.size() && name.substr(name.size() - e.size()) == e) {
                common.push_back(name.substr(0, name.size() - e.size()));
                break;
            }
        }
    }
    std::sort(common.begin(), common.end());
    common.erase(std::unique(common.begin(), common.end()), common.end());
    std::erase_if(common, [&](const std::string& mod) {
        for (const auto& s : dm.subjects) {
            bool found = false;
            for (const char* ext : {".hinv", ".nii.gz", ".nii"})
                if (fs::exists(fs::path(o.data_root) / s / (mod + ext))) found = true;
            if (!found) return true;
        }
        return false;
    });
    dm.modalities = common;

    save_manifest((fs::path(o.data_root) / "manifest.json").string(), dm);
    std::printf("prepared %zu subjects (%zu train / %zu val), task %s+%s->%s\n",
                dm.subjects.size(), dm.split.train.size(), dm.split.val.size(),
                dm.task.source1.c_str(), dm.task.source2.c_str(), dm.task.target.c_str());
}

void run_train(const CLI::App* sub, const CliOptions& o) {
    RunManifest m = manifest_from_config(o.config_path, "train");
    apply_train_overrides(m, sub, o);
    HINET_CHECK(!m.data_root.empty(), ConfigError,
                "no dataset root; pass --data or set data_root in the config");
    const DatasetManifest dm = require_dataset_manifest(m.data_root);
    if (o.config_path.empty()) m.task = dm.task;
    apply_task_overrides(m.task, sub, o);
    m.model.validate();
    m.train.validate();
    finalize_manifest(m);
    write_run_manifest(o.run_dir, m);

    SampleOptions so;
    so.patch = m.model.input_rows;
    so.skip_constant_target = o.skip_empty;
    const std::vector<Sample> samples =
        build_samples(m.data_root, dm.split.train, m.task, so);
    std::printf("run %s: %zu training samples from %zu subjects\n", m.run_id.c_str(),
                samples.size(), dm.split.train.size());

    if (o.resume.empty()) {
        HiNetModel model(m.model, m.train.seed);
        Trainer trainer(model, m.train);
        trainer.fit(samples, o.run_dir);
        std::printf("training complete after %d epochs; loss log at %s\n",
                    trainer.completed_epochs(),
                    (fs::path(o.run_dir) / "loss_log.csv").string().c_str());
    } else {
        const LoadedCheckpoint lc = load_checkpoint(o.resume);
        HiNetModel model(lc.config, m.train.seed);
        Trainer trainer = Trainer::resumed(model, o.resume);
        // The stored state is authoritative on resume; rewrite the manifest
        // to reflect what actually runs.
        m.model = lc.config;
        m.train = trainer.config();
        m.variant = variant_name(lc.config.fusion_variant);
        finalize_manifest(m);
        write_run_manifest(o.run_dir, m);
        trainer.fit(samples, o.run_dir);
        std::printf("resumed training complete after %d epochs; loss log at %s\n",
                    trainer.completed_epochs(),
                    (fs::path(o.run_dir) / "loss_log.csv").string().c_str());
    }
}

void run_synthesize(const CLI::App* sub, const CliOptions& o) {
    const LoadedCheckpoint lc = load_checkpoint(o.checkpoint);
    TaskSpec task;
    if (fs::exists(fs::path(o.data_root) / "manifest.json"))
        task = require_dataset_manifest(o.data_root).task;
    apply_task_overrides(task, sub, o);

    RunManifest m;
    m.command = "synthesize";
    m.data_root = o.data_root;
    m.task = task;
    m.model = lc.config;
    m.variant = variant_name(lc.config.fusion_variant);
    finalize_manifest(m);
    const std::string src_path = modality_path(o.data_root, o.subject, task.source1);
    std::string ext = ".hinv";
    for (const char* e : {".nii.gz", ".nii", ".hinv"})
        if (src_path.size() > std::string(e).size() &&
            src_path.substr(src_path.size() - std::string(e).size()) == e)
            ext = e;
    std::string out = o.out_path;
    std::string run_dir = o.run_dir;
    if (out.empty()) {
        if (run_dir.empty()) run_dir = ".";
        out = (fs::path(run_dir) / (o.subject + "_" + task.target + ext)).string();
    } else if (run_dir.empty()) {
        run_dir = fs::path(out).has_parent_path() ? fs::path(out).parent_path().string() : ".";
    }
    write_run_manifest(run_dir, m);

    HiNetModel model(lc.config, 0);
    restore_model(model, lc);
    const Volume x1 = normalize_volume(load_volume(src_path));
    const Volume x2 = normalize_volume(load_modality(o.data_root, o.subject, task.source2));
    SampleOptions so;
    so.patch = lc.config.input_rows;
    Volume y = synthesize_volume(model, x1, x2, so);
    for (auto& v : y.data) v = (v + 1.0f) * 0.5f;  // network domain -> [0, 1]
    save_volume(out, y);
    std::printf("synthesized %s for subject %s -> %s (%dx%dx%d)\n", task.target.c_str(),
                o.subject.c_str(), out.c_str(), y.slices, y.rows, y.cols);
}

void run_evaluate(const CLI::App* sub, const CliOptions& o) {
    const LoadedCheckpoint lc = load_checkpoint(o.checkpoint);
    const DatasetManifest dm = require_dataset_manifest(o.data_root);
    TaskSpec task = dm.task;
    apply_task_overrides(task, sub, o);

    RunManifest m;
    m.command = "evaluate";
    m.data_root = o.data_root;
    m.task = task;
    m.model = lc.config;
    m.variant = variant_name(lc.config.fusion_variant);
    finalize_manifest(m);
    write_run_manifest(o.run_dir, m);

    const std::vector<std::string>& subjects = o.split == "train" ? dm.split.train
                                               : o.split == "all" ? dm.subjects
                                                                  : dm.split.val;
    HINET_CHECK(!subjects.empty(), DataError, "selected split '", o.split, "' is empty");

    HiNetModel model(lc.config, 0);
    restore_model(model, lc);
    SampleOptions so;
    so.patch = lc.config.input_rows;
    const std::vector<Sample> samples = build_samples(o.data_root, subjects, task, so);
    const std::vector<SliceResult> results = synthesize_slices(model, samples);
    const EvalSummary summary = evaluate_slice_results(results);

    write_slice_csv((fs::path(o.run_dir) / "eval_slices.csv").string(), summary.slices);
    write_text_file((fs::path(o.run_dir) / "eval_summary.txt").string(),
                    eval_summary_text(summary));
    const fs::path slice_dir = fs::path(o.run_dir) / "report_slices";
    fs::create_directories(slice_dir);
    const int n_saved = std::min<int>(o.grid_rows, static_cast<int>(results.size()));
    for (int i = 0; i < n_saved; ++i) {
        char stem[64];
        std::snprintf(stem, sizeof(stem), "%03d_%s_s%d", i, results[static_cast<size_t>(i)].subject.c_str(),
                      results[static_cast<size_t>(i)].slice);
        const SliceResult& r = results[static_cast<size_t>(i)];
        save_volume_hinv((slice_dir / (std::string(stem) + "_x1.hinv")).string(),
                         volume_from_image(r.x1));
        save_volume_hinv((slice_dir / (std::string(stem) + "_x2.hinv")).string(),
                         volume_from_image(r.x2));
        save_volume_hinv((slice_dir / (std::string(stem) + "_y.hinv")).string(),
                         volume_from_image(r.target));
        save_volume_hinv((slice_dir / (std::string(stem) + "_yhat.hinv")).string(),
                         volume_from_image(r.synthesized));
    }
    std::fputs(eval_summary_text(summary).c_str(), stdout);
    std::printf("per-slice metrics at %s\n",
                (fs::path(o.run_dir) / "eval_slices.csv").string().c_str());
}

void run_ablate(const CLI::App* sub, const CliOptions& o) {
    RunManifest m = manifest_from_config(o.config_path, "ablate");
    apply_train_overrides(m, sub, o);
    HINET_CHECK(!m.data_root.empty(), ConfigError,
                "no dataset root; pass --data or set data_root in the config");
    m.variant = o.variants.empty() ? "all" : [&] {
        std::string joined;
        for (const auto& v : o.variants) joined += (joined.empty() ? "" : "+") + v;
        return joined;
    }();
    m.model.validate();
    m.train.validate();
    finalize_manifest(m);
    write_run_manifest(o.run_dir, m);

    AblationOptions ao;
    ao.seeds = o.seeds;
    ao.variants = o.variants;
    const AblationResult res = run_ablation(m.data_root, m.model, m.train, ao, o.run_dir);
    write_ablation_artifacts(o.run_dir, res);
    std::fputs(ablation_table_text(res).c_str(), stdout);
}

void run_report(const CliOptions& o) {
    for (const auto& path : emit_report(o.run_dir)) std::printf("wrote %s\n", path.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid-fusion synthesis of a missing MR modality from two others"};
    app.require_subcommand(1);
    CliOptions o;

    auto* gen = app.add_subcommand("phantom-gen", "Generate a synthetic phantom dataset");
    gen->add_option("--out", o.data_root, "dataset root to create")->required();
    gen->add_option("--subjects", o.subjects, "number of subjects");
    gen->add_option("--slices", o.slices, "slices per volume");
    gen->add_option("--rows", o.rows, "slice rows");
    gen->add_option("--cols", o.cols, "slice cols");
    gen->add_option("--seed", o.seed, "dataset seed");
    gen->add_option("--train-fraction", o.train_fraction, "train split fraction");
    gen->add_option("--run-dir", o.run_dir, "where to record the run manifest");
    gen->callback([&] { run_phantom_gen(gen, o); });

    auto* prep = app.add_subcommand("prepare-data", "Index an existing dataset directory");
    prep->add_option("--data", o.data_root, "dataset root")->required();
    add_task_options(prep, o);
    prep->add_option("--train-fraction", o.train_fraction, "train split fraction");
    prep->add_option("--seed", o.seed, "split seed");
    prep->add_option("--run-dir", o.run_dir, "where to record the run manifest");
    prep->callback([&] { run_prepare_data(prep, o); });

    auto* train = app.add_subcommand("train", "Train a synthesis model");
    train->add_option("--config", o.config_path,
                      "JSON config or a run_manifest.json from a previous run");
    train->add_option("--run-dir", o.run_dir, "output directory")->required();
    train->add_option("--data", o.data_root, "dataset root (overrides config)");
    train->add_option("--variant", o.variant, "fusion variant (overrides config)");
    train->add_option("--seed", o.seed, "training seed (overrides config)");
    train->add_option("--epochs", o.epochs, "epochs (overrides config)");
    train->add_option("--decay-start", o.decay_start, "last epoch at the base rate");
    train->add_option("--input-size", o.input_size, "square network input size (overrides config)");
    train->add_option("--batch-size", o.batch_size, "batch size (overrides config)");
    train->add_option("--lr", o.lr, "base learning rate (overrides config)");
    train->add_flag("--strict-minimax-adv", o.strict_minimax,
                    "use the log(1-D) generator adversarial term");
    train->add_flag("--skip-empty-slices", o.skip_empty,
                    "drop samples whose target patch is constant");
    train->add_option("--resume", o.resume, "checkpoint to continue from");
    add_task_options(train, o);
    train->callback([&] { run_train(train, o); });

    auto* synth = app.add_subcommand("synthesize", "Synthesize the missing modality");
    synth->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
    synth->add_option("--data", o.data_root, "dataset root")->required();
    synth->add_option("--subject", o.subject, "subject directory name")->required();
    synth->add_option("--out", o.out_path, "output volume path (.hinv, .nii, .nii.gz)");
    synth->add_option("--run-dir", o.run_dir, "where to record the run manifest");
    add_task_options(synth, o);
    synth->callback([&] { run_synthesize(synth, o); });

    auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset split");
    eval->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
    eval->add_option("--data", o.data_root, "dataset root")->required();
    eval->add_option("--run-dir", o.run_dir, "output directory")->required();
    eval->add_option("--split", o.split, "val, train, or all")
        ->check(CLI::IsMember({"val", "train", "all"}));
    eval->add_option("--grid-rows", o.grid_rows, "slices saved for the report image grid");
    add_task_options(eval, o);
    eval->callback([&] { run_evaluate(eval, o); });

    auto* abl = app.add_subcommand("ablate", "Train and compare the fusion variants");
    abl->add_option("--data", o.data_root, "dataset root")->required();
    abl->add_option("--run-dir", o.run_dir, "output directory")->required();
    abl->add_option("--config", o.config_path, "base JSON config");
    abl->add_option("--seeds", o.seeds, "seeds, comma separated")->delimiter(',');
    abl->add_option("--variants", o.variants, "variant subset, comma separated")
        ->delimiter(',');
    abl->add_option("--epochs", o.epochs, "epochs per run (overrides config)");
    abl->add_option("--decay-start", o.decay_start, "last epoch at the base rate");
    abl->add_option("--input-size", o.input_size, "square network input size (overrides config)");
    abl->add_option("--batch-size", o.batch_size, "batch size (overrides config)");
    abl->add_option("--lr", o.lr, "base learning rate (overrides config)");
    abl->add_flag("--strict-minimax-adv", o.strict_minimax,
                  "use the log(1-D) generator adversarial term");
    abl->callback([&] { run_ablate(abl, o); });

    auto* rep = app.add_subcommand("report", "Render plots, tables, and image grids for a run");
    rep->add_option("--run-dir", o.run_dir, "run directory to summarize")->required();
    rep->callback([&] { run_report(o); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
