#pragma once

#include <type_traits>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define SPIN_GEMM_AVX2 1
#endif

namespace spin {

// Row-major GEMM kernels in accumulate form (C += op(A) * B), single-threaded
// with a fixed accumulation order so results are bit-reproducible.
//
// The hot path keeps a 4-row register tile live across the K loop (explicit
// FMA intrinsics where available); edge tiles fall back to plain loops.

namespace gemm_detail {

inline constexpr int MR = 4;
template <typename T>
inline constexpr int NR = sizeof(T) == 4 ? 16 : 8;
inline constexpr int KB = 256;

#ifdef SPIN_GEMM_AVX2

// A indexed A[row * lda + k] (nn) or A[k * lda + row] (tn).
template <bool A_TRANS>
inline void tile_full(int kb, const float* A, long long lda, const float* B, long long ldb,
                      float* C, long long ldc) {
  __m256 acc00 = _mm256_setzero_ps(), acc01 = _mm256_setzero_ps();
  __m256 acc10 = _mm256_setzero_ps(), acc11 = _mm256_setzero_ps();
  __m256 acc20 = _mm256_setzero_ps(), acc21 = _mm256_setzero_ps();
  __m256 acc30 = _mm256_setzero_ps(), acc31 = _mm256_setzero_ps();
  for (int k = 0; k < kb; ++k) {
    const float* b = B + static_cast<long long>(k) * ldb;
    const __m256 b0 = _mm256_loadu_ps(b);
    const __m256 b1 = _mm256_loadu_ps(b + 8);
    __m256 a0, a1, a2, a3;
    if constexpr (A_TRANS) {
      const float* a = A + static_cast<long long>(k) * lda;
      a0 = _mm256_set1_ps(a[0]);
      a1 = _mm256_set1_ps(a[1]);
      a2 = _mm256_set1_ps(a[2]);
      a3 = _mm256_set1_ps(a[3]);
    } else {
      a0 = _mm256_set1_ps(A[0 * lda + k]);
      a1 = _mm256_set1_ps(A[1 * lda + k]);
      a2 = _mm256_set1_ps(A[2 * lda + k]);
      a3 = _mm256_set1_ps(A[3 * lda + k]);
    }
    acc00 = _mm256_fmadd_ps(a0, b0, acc00);
    acc01 = _mm256_fmadd_ps(a0, b1, acc01);
    acc10 = _mm256_fmadd_ps(a1, b0, acc10);
    acc11 = _mm256_fmadd_ps(a1, b1, acc11);
    acc20 = _mm256_fmadd_ps(a2, b0, acc20);
    acc21 = _mm256_fmadd_ps(a2, b1, acc21);
    acc30 = _mm256_fmadd_ps(a3, b0, acc30);
    acc31 = _mm256_fmadd_ps(a3, b1, acc31);
  }
  float* c0 = C;
  float* c1 = C + ldc;
  float* c2 = C + 2 * ldc;
  float* c3 = C + 3 * ldc;
  _mm256_storeu_ps(c0, _mm256_add_ps(_mm256_loadu_ps(c0), acc00));
  _mm256_storeu_ps(c0 + 8, _mm256_add_ps(_mm256_loadu_ps(c0 + 8), acc01));
  _mm256_storeu_ps(c1, _mm256_add_ps(_mm256_loadu_ps(c1), acc10));
  _mm256_storeu_ps(c1 + 8, _mm256_add_ps(_mm256_loadu_ps(c1 + 8), acc11));
  _mm256_storeu_ps(c2, _mm256_add_ps(_mm256_loadu_ps(c2), acc20));
  _mm256_storeu_ps(c2 + 8, _mm256_add_ps(_mm256_loadu_ps(c2 + 8), acc21));
  _mm256_storeu_ps(c3, _mm256_add_ps(_mm256_loadu_ps(c3), acc30));
  _mm256_storeu_ps(c3 + 8, _mm256_add_ps(_mm256_loadu_ps(c3 + 8), acc31));
}

template <bool A_TRANS>
inline void tile_full(int kb, const double* A, long long lda, const double* B, long long ldb,
                      double* C, long long ldc) {
  __m256d acc00 = _mm256_setzero_pd(), acc01 = _mm256_setzero_pd();
  __m256d acc10 = _mm256_setzero_pd(), acc11 = _mm256_setzero_pd();
  __m256d acc20 = _mm256_setzero_pd(), acc21 = _mm256_setzero_pd();
  __m256d acc30 = _mm256_setzero_pd(), acc31 = _mm256_setzero_pd();
  for (int k = 0; k < kb; ++k) {
    const double* b = B + static_cast<long long>(k) * ldb;
    const __m256d b0 = _mm256_loadu_pd(b);
    const __m256d b1 = _mm256_loadu_pd(b + 4);
    __m256d a0, a1, a2, a3;
    if constexpr (A_TRANS) {
      const double* a = A + static_cast<long long>(k) * lda;
      a0 = _mm256_set1_pd(a[0]);
      a1 = _mm256_set1_pd(a[1]);
      a2 = _mm256_set1_pd(a[2]);
      a3 = _mm256_set1_pd(a[3]);
    } else {
      a0 = _mm256_set1_pd(A[0 * lda + k]);
      a1 = _mm256_set1_pd(A[1 * lda + k]);
      a2 = _mm256_set1_pd(A[2 * lda + k]);
      a3 = _mm256_set1_pd(A[3 * lda + k]);
    }
    acc00 = _mm256_fmadd_pd(a0, b0, acc00);
    acc01 = _mm256_fmadd_pd(a0, b1, acc01);
    acc10 = _mm256_fmadd_pd(a1, b0, acc10);
    acc11 = _mm256_fmadd_pd(a1, b1, acc11);
    acc20 = _mm256_fmadd_pd(a2, b0, acc20);
    acc21 = _mm256_fmadd_pd(a2, b1, acc21);
    acc30 = _mm256_fmadd_pd(a3, b0, acc30);
    acc31 = _mm256_fmadd_pd(a3, b1, acc31);
  }
  double* c0 = C;
  double* c1 = C + ldc;
  double* c2 = C + 2 * ldc;
  double* c3 = C + 3 * ldc;
  _mm256_storeu_pd(c0, _mm256_add_pd(_mm256_loadu_pd(c0), acc00));
  _mm256_storeu_pd(c0 + 4, _mm256_add_pd(_mm256_loadu_pd(c0 + 4), acc01));
  _mm256_storeu_pd(c1, _mm256_add_pd(_mm256_loadu_pd(c1), acc10));
  _mm256_storeu_pd(c1 + 4, _mm256_add_pd(_mm256_loadu_pd(c1 + 4), acc11));
  _mm256_storeu_pd(c2, _mm256_add_pd(_mm256_loadu_pd(c2), acc20));
  _mm256_storeu_pd(c2 + 4, _mm256_add_pd(_mm256_loadu_pd(c2 + 4), acc21));
  _mm256_storeu_pd(c3, _mm256_add_pd(_mm256_loadu_pd(c3), acc30));
  _mm256_storeu_pd(c3 + 4, _mm256_add_pd(_mm256_loadu_pd(c3 + 4), acc31));
}

#endif  // SPIN_GEMM_AVX2

// Edge tile (or no-SIMD) fallback; A_TRANS selects the A indexing.
template <bool A_TRANS, typename T>
inline void tile_edge(int kb, int iw, int jw, const T* A, long long lda, const T* B,
                      long long ldb, T* C, long long ldc) {
  T acc[MR][NR<T>] = {};
  for (int k = 0; k < kb; ++k) {
    const T* b = B + static_cast<long long>(k) * ldb;
    for (int r = 0; r < iw; ++r) {
      const T a = A_TRANS ? A[static_cast<long long>(k) * lda + r] : A[r * lda + k];
      for (int j = 0; j < jw; ++j) acc[r][j] += a * b[j];
    }
  }
  for (int r = 0; r < iw; ++r)
    for (int j = 0; j < jw; ++j) C[r * ldc + j] += acc[r][j];
}

template <bool A_TRANS, typename T>
inline void tile(int kb, int iw, int jw, const T* A, long long lda, const T* B, long long ldb,
                 T* C, long long ldc) {
#ifdef SPIN_GEMM_AVX2
  if (iw == MR && jw == NR<T>) {
    tile_full<A_TRANS>(kb, A, lda, B, ldb, C, ldc);
    return;
  }
#endif
  tile_edge<A_TRANS>(kb, iw, jw, A, lda, B, ldb, C, ldc);
}

template <bool A_TRANS, typename T>
void gemm_impl(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int j0 = 0; j0 < N; j0 += NR<T>) {
    const int jw = j0 + NR<T> <= N ? NR<T> : N - j0;
    for (int k0 = 0; k0 < K; k0 += KB) {
      const int kb = k0 + KB <= K ? KB : K - k0;
      const T* a_base = A_TRANS ? A + static_cast<long long>(k0) * M
                                : A + static_cast<long long>(k0);
      for (int i0 = 0; i0 < M; i0 += MR) {
        const int iw = i0 + MR <= M ? MR : M - i0;
        const T* a = A_TRANS ? a_base + i0 : a_base + static_cast<long long>(i0) * K;
        tile<A_TRANS>(kb, iw, jw, a, A_TRANS ? M : K, B + static_cast<long long>(k0) * N + j0,
                      N, C + static_cast<long long>(i0) * N + j0, N);
      }
    }
  }
}

}  // namespace gemm_detail

// C[M x N] += A[M x K] * B[K x N]
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C) {
  gemm_detail::gemm_impl<false>(M, N, K, A, B, C);
}

// C[M x N] += A^T * B, where A is stored [K x M]
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C) {
  gemm_detail::gemm_impl<true>(M, N, K, A, B, C);
}

}  // namespace spin
