#pragma once
/// @file report.hpp
/// Human-readable run artifacts: loss-curve SVG plots, grayscale PNG image
/// grids, per-slice metric CSVs, and the fusion-variant comparison table.

#include <string>
#include <vector>

#include "hinet/inference.hpp"
#include "hinet/variants.hpp"

namespace hinet {

/// Per-slice metrics CSV with header subject,slice,psnr,nmse,ssim.
void write_slice_csv(const std::string& path, const std::vector<SliceEval>& slices);
std::vector<SliceEval> read_slice_csv(const std::string& path);

/// Aligned text table of mean +/- sample stddev per metric.
std::string eval_summary_text(const EvalSummary& s);

/// 8-bit grayscale PNG of a (rows, cols) tensor; values are mapped from
/// [-1, 1] to [0, 255] and clamped.
void write_png_gray(const std::string& path, const Tensor& img);

/// One row per slice with columns (x1, x2, target, synthesized), rendered
/// to a single PNG.  At most max_rows slices are shown.
void write_image_grid(const std::string& path, const std::vector<SliceResult>& slices,
                      int max_rows = 8);

/// Line chart of every loss column in a training loss log (one polyline per
/// column past epoch/step/lr) against global step.
void write_loss_curves_svg(const std::string& loss_log_path, const std::string& svg_path);

/// Comparison table over variants; rows with failed runs show the gap count
/// and the failure reasons are listed below the table.
std::string ablation_table_text(const AblationResult& r);

/// Writes ablation_table.txt and ablation_rows.csv under run_dir.
void write_ablation_artifacts(const std::string& run_dir, const AblationResult& r);

/// Rebuilds comparison rows purely from the per-run slice CSVs under
/// <run_dir>/<variant>/seed_*/eval_slices.csv.  This is the authority the
/// rendered table must agree with.
AblationResult rederive_ablation(const std::string& run_dir);

/// Renders everything available under run_dir into <run_dir>/report/:
/// loss curves (required; missing logs raise DataError), a metric table
/// when eval_slices.csv is present, an image grid when saved evaluation
/// slices are present, and the variant table when per-variant runs are
/// present.  Returns the paths written.
std::vector<std::string> emit_report(const std::string& run_dir);

}  // namespace hinet
