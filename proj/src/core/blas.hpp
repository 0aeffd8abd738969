#pragma once

#include <cstdint>

namespace topdown {

// Row-major sgemm: C = alpha * op(A) * op(B) + beta * C.
// op(A) is (m x k), op(B) is (k x n), C is (m x n).
void sgemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
           float alpha, const float* a, int64_t lda, const float* b, int64_t ldb,
           float beta, float* c, int64_t ldc);

// Pins the BLAS thread count (deterministic mode / benchmarking).
void set_blas_threads(int n);

}  // namespace topdown
