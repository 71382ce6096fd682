#pragma once

#include <cstddef>
#include <vector>

namespace chesslab {

// Row-major GEMM/GEMV wrappers over CBLAS, templated on the scalar so the
// whole model can run in float (production) or double (gradient checking).
// C[m,n] = alpha * op(A) * op(B) + beta * C.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc);

template <typename T>
void gemv(bool trans, int m, int n, T alpha, const T* a, int lda, const T* x, T beta, T* y);

void set_blas_threads(int n);
int blas_threads();

// y += x
template <typename T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
inline T dot(std::size_t n, const T* a, const T* b) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace chesslab
