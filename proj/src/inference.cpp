#include "hinet/inference.hpp"

#include <algorithm>
#include <map>

namespace hinet {

Tensor synthesize_batch(const HiNetModel& model, const Tensor& x1, const Tensor& x2) {
    Graph g(false, false);
    const auto out = model.generator_forward(g, g.leaf(x1), g.leaf(x2));
    return out.yhat->value;
}

std::vector<SliceResult> synthesize_slices(const HiNetModel& model,
                                           const std::vector<Sample>& samples) {
    HINET_CHECK(!samples.empty(), DataError, "no samples to synthesize");
    std::map<std::pair<std::string, int>, std::vector<const Sample*>> groups;
    for (const Sample& s : samples) groups[{s.subject, s.slice}].push_back(&s);

    std::vector<SliceResult> out;
    for (const auto& [key, members] : groups) {
        const int patch = members[0]->y.dim(0);
        int rows = 0, cols = 0;
        std::vector<std::pair<int, int>> anchors;
        for (const Sample* s : members) {
            anchors.emplace_back(s->anchor_row, s->anchor_col);
            rows = std::max(rows, s->anchor_row + patch);
            cols = std::max(cols, s->anchor_col + patch);
        }
        const int n = static_cast<int>(members.size());
        Tensor bx1({n, 1, patch, patch}), bx2({n, 1, patch, patch});
        const int64_t plane = static_cast<int64_t>(patch) * patch;
        for (int i = 0; i < n; ++i) {
            std::copy(members[static_cast<size_t>(i)]->x1.data(),
                      members[static_cast<size_t>(i)]->x1.data() + plane, bx1.data() + i * plane);
            std::copy(members[static_cast<size_t>(i)]->x2.data(),
                      members[static_cast<size_t>(i)]->x2.data() + plane, bx2.data() + i * plane);
        }
        const Tensor yhat = synthesize_batch(model, bx1, bx2);

        auto stitch_from = [&](auto getter) {
            std::vector<Tensor> patches;
            for (int i = 0; i < n; ++i) patches.push_back(getter(i));
            return stitch_patches(patches, anchors, rows, cols);
        };
        SliceResult r;
        r.subject = key.first;
        r.slice = key.second;
        r.x1 = stitch_from([&](int i) { return members[static_cast<size_t>(i)]->x1; });
        r.x2 = stitch_from([&](int i) { return members[static_cast<size_t>(i)]->x2; });
        r.target = stitch_from([&](int i) { return members[static_cast<size_t>(i)]->y; });
        r.synthesized = stitch_from([&](int i) {
            Tensor p({patch, patch});
            std::copy(yhat.data() + i * plane, yhat.data() + (i + 1) * plane, p.data());
            return p;
        });
        out.push_back(std::move(r));
    }
    return out;
}

EvalSummary evaluate_slice_results(const std::vector<SliceResult>& results) {
    EvalSummary summary;
    std::vector<double> psnrs, nmses, ssims;
    for (const SliceResult& r : results) {
        SliceEval e;
        e.subject = r.subject;
        e.slice = r.slice;
        e.psnr = metric_psnr(r.target, r.synthesized);
        e.nmse = metric_nmse(r.target, r.synthesized);
        e.ssim = metric_ssim(r.target, r.synthesized);
        psnrs.push_back(e.psnr);
        nmses.push_back(e.nmse);
        ssims.push_back(e.ssim);
        summary.slices.push_back(std::move(e));
    }
    summary.psnr = aggregate_stats(psnrs);
    summary.nmse = aggregate_stats(nmses);
    summary.ssim = aggregate_stats(ssims);
    return summary;
}

EvalSummary aggregate_evaluate(const HiNetModel& model, const std::vector<Sample>& samples) {
    return evaluate_slice_results(synthesize_slices(model, samples));
}

Volume synthesize_volume(const HiNetModel& model, const Volume& x1, const Volume& x2,
                         const SampleOptions& opt) {
    HINET_CHECK(x1.slices == x2.slices && x1.rows == x2.rows && x1.cols == x2.cols, DataError,
                "source volumes disagree in shape");
    // Reuse the sample cutter with the target standing in for itself.
    std::vector<Sample> samples = cut_samples("volume", x1, x2, x1, opt);
    const auto slices = synthesize_slices(model, samples);
    HINET_CHECK(!slices.empty(), DataError, "no slices synthesized");
    const int rows = slices[0].synthesized.dim(0), cols = slices[0].synthesized.dim(1);
    Volume out(x1.slices, rows, cols);
    for (const auto& r : slices) {
        HINET_CHECK(r.slice >= 0 && r.slice < out.slices, DimensionError, "slice index range");
        std::copy(r.synthesized.data(), r.synthesized.data() + r.synthesized.size(),
                  out.data.data() + static_cast<int64_t>(r.slice) * rows * cols);
    }
    return out;
}

}  // namespace hinet
