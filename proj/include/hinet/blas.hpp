#pragma once
/// @file blas.hpp
/// Thin wrapper over single-threaded BLAS sgemm, used by the convolution kernels.

namespace hinet {

/// C[m x n] = alpha * op(A) * op(B) + beta * C, row-major.
/// op is transpose when the corresponding flag is set; lda/ldb/ldc are row strides.
void sgemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
           const float* b, int ldb, float beta, float* c, int ldc);

/// Human-readable name of the BLAS kernel set in use (for diagnostics).
const char* blas_core_name();

}  // namespace hinet
