#pragma once
/// @file inference.hpp
/// Eval-mode synthesis and slice-level evaluation.

#include <string>
#include <vector>

#include "hinet/metrics.hpp"
#include "hinet/model.hpp"
#include "hinet/pipeline.hpp"

namespace hinet {

/// No-grad eval-mode synthesis on a batch of patches (n, 1, h, w);
/// batch-norm uses running statistics, so results are batch-composition
/// independent.
Tensor synthesize_batch(const HiNetModel& model, const Tensor& x1, const Tensor& x2);

/// One evaluated slice: patches synthesized and stitched back together.
struct SliceResult {
    std::string subject;
    int slice = 0;
    Tensor x1, x2;      ///< stitched source slices (network domain)
    Tensor target;      ///< stitched ground-truth slice
    Tensor synthesized; ///< stitched model output
};

/// Groups samples by (subject, slice), synthesizes each group's patches in
/// one forward pass, and stitches.  Groups come back sorted by subject then
/// slice index.
std::vector<SliceResult> synthesize_slices(const HiNetModel& model,
                                           const std::vector<Sample>& samples);

struct SliceEval {
    std::string subject;
    int slice = 0;
    double psnr = 0.0, nmse = 0.0, ssim = 0.0;
};

struct EvalSummary {
    MetricStats psnr, nmse, ssim;
    std::vector<SliceEval> slices;
};

/// Per-slice metrics of already-synthesized slices against their targets,
/// aggregated as mean and sample stddev over slices.
EvalSummary evaluate_slice_results(const std::vector<SliceResult>& results);

/// Per-slice metrics of stitched synthesis against stitched ground truth,
/// aggregated as mean and sample stddev over slices.
EvalSummary aggregate_evaluate(const HiNetModel& model, const std::vector<Sample>& samples);

/// Whole-volume synthesis from normalized source volumes; output stays in
/// the network domain [-1, 1].
Volume synthesize_volume(const HiNetModel& model, const Volume& x1, const Volume& x2,
                         const SampleOptions& opt);

}  // namespace hinet
