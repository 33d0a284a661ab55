#pragma once
/// @file metrics.hpp
/// Image-quality metrics between a reference and a test image.
///
/// Inputs are network-domain images in [-1, 1]; every metric first applies
/// the fixed rescale (x + 1) / 2 so intensities live in [0, 1].  All
/// accumulation is double precision.

#include <vector>

#include "hinet/tensor.hpp"

namespace hinet {

/// 10 * log10(peak^2 / mse) with peak = max intensity over BOTH rescaled
/// images.  Identical images give +infinity.
double metric_psnr(const Tensor& ref, const Tensor& test);

/// sum((ref - test)^2) / sum(ref^2) on rescaled intensities.  A reference
/// that rescales to all zeros has no defined value and raises NumericError.
double metric_nmse(const Tensor& ref, const Tensor& test);

/// Mean structural similarity over an 11x11 Gaussian window (sigma 1.5),
/// valid convolution (no padding), dynamic range L = 1, c1 = (0.01 L)^2,
/// c2 = (0.03 L)^2.  Images must be at least 11x11.
double metric_ssim(const Tensor& ref, const Tensor& test);

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev (n - 1); zero when n < 2
    int count = 0;        // values aggregated
    int excluded = 0;     // non-finite values left out (e.g. +inf psnr)
};

/// Mean and sample stddev, skipping non-finite entries.
MetricStats aggregate_stats(const std::vector<double>& values);

}  // namespace hinet
