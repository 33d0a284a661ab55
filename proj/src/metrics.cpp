#include "hinet/metrics.hpp"

#include <cmath>
#include <limits>

#include "hinet/common.hpp"

namespace hinet {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Tensor& ref, const Tensor& test, const char* what) {
    HINET_CHECK(ref.ndim() == 2, DimensionError, what, " expects 2-d images");
    check_same_shape(ref, test, what);
}

inline double rescale(float v) { return (static_cast<double>(v) + 1.0) * 0.5; }

/// Separable valid-region Gaussian blur; output is (rows-10, cols-10).
std::vector<double> blur_valid(const std::vector<double>& img, int rows, int cols) {
    static const std::vector<double> taps = [] {
        std::vector<double> t(kWindow);
        double sum = 0.0;
        for (int k = 0; k < kWindow; ++k) {
            const double d = k - (kWindow - 1) / 2;
            t[static_cast<size_t>(k)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
            sum += t[static_cast<size_t>(k)];
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    const int cols2 = cols - kWindow + 1;
    std::vector<double> tmp(static_cast<size_t>(rows) * cols2);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols2; ++c) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k)
                acc += taps[static_cast<size_t>(k)] *
                       img[static_cast<size_t>(r) * cols + c + k];
            tmp[static_cast<size_t>(r) * cols2 + c] = acc;
        }
    const int rows2 = rows - kWindow + 1;
    std::vector<double> out(static_cast<size_t>(rows2) * cols2);
    for (int r = 0; r < rows2; ++r)
        for (int c = 0; c < cols2; ++c) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k)
                acc += taps[static_cast<size_t>(k)] *
                       tmp[static_cast<size_t>(r + k) * cols2 + c];
            out[static_cast<size_t>(r) * cols2 + c] = acc;
        }
    return out;
}

}  // namespace

double metric_psnr(const Tensor& ref, const Tensor& test) {
    check_pair(ref, test, "psnr");
    double peak = 0.0, se = 0.0;
    const int64_t n = ref.size();
    for (int64_t i = 0; i < n; ++i) {
        const double a = rescale(ref[i]), b = rescale(test[i]);
        peak = a > peak ? a : peak;
        peak = b > peak ? b : peak;
        const double d = a - b;
        se += d * d;
    }
    const double mse = se / static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double metric_nmse(const Tensor& ref, const Tensor& test) {
    check_pair(ref, test, "nmse");
    double num = 0.0, den = 0.0;
    const int64_t n = ref.size();
    for (int64_t i = 0; i < n; ++i) {
        const double a = rescale(ref[i]), b = rescale(test[i]);
        const double d = a - b;
        num += d * d;
        den += a * a;
    }
    HINET_CHECK(den > 0.0, NumericError,
                "nmse undefined: reference image rescales to all zeros");
    return num / den;
}

double metric_ssim(const Tensor& ref, const Tensor& test) {
    check_pair(ref, test, "ssim");
    const int rows = ref.dim(0), cols = ref.dim(1);
    HINET_CHECK(rows >= kWindow && cols >= kWindow, DimensionError, "ssim needs at least ",
                kWindow, "x", kWindow, " images, got ", rows, "x", cols);
    const size_t n = static_cast<size_t>(rows) * cols;
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
        a[i] = rescale(ref[static_cast<int64_t>(i)]);
        b[i] = rescale(test[static_cast<int64_t>(i)]);
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu1 = blur_valid(a, rows, cols);
    const auto mu2 = blur_valid(b, rows, cols);
    const auto m11 = blur_valid(aa, rows, cols);
    const auto m22 = blur_valid(bb, rows, cols);
    const auto m12 = blur_valid(ab, rows, cols);
    double acc = 0.0;
    for (size_t i = 0; i < mu1.size(); ++i) {
        const double s11 = m11[i] - mu1[i] * mu1[i];
        const double s22 = m22[i] - mu2[i] * mu2[i];
        const double s12 = m12[i] - mu1[i] * mu2[i];
        const double num = (2.0 * mu1[i] * mu2[i] + kC1) * (2.0 * s12 + kC2);
        const double den = (mu1[i] * mu1[i] + mu2[i] * mu2[i] + kC1) * (s11 + s22 + kC2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu1.size());
}

MetricStats aggregate_stats(const std::vector<double>& values) {
    MetricStats s;
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            ++s.excluded;
            continue;
        }
        sum += v;
        ++s.count;
    }
    if (s.count == 0) return s;
    s.mean = sum / s.count;
    if (s.count >= 2) {
        double ss = 0.0;
        for (double v : values) {
            if (!std::isfinite(v)) continue;
            const double d = v - s.mean;
            ss += d * d;
        }
        s.stddev = std::sqrt(ss / (s.count - 1));
    }
    return s;
}

}  // namespace hinet
