// AVX2 + FMA variants. This translation unit is built with -mavx2 -mfma and
// must only be entered after the runtime CPU check in dispatch.cpp.

#include "kernels_internal.hpp"

#include <immintrin.h>

namespace safedqn::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lane i of the result is the horizontal sum of v_i.
inline __m256d hsum4(__m256d v0, __m256d v1, __m256d v2, __m256d v3) {
    const __m256d t0 = _mm256_hadd_pd(v0, v1);
    const __m256d t1 = _mm256_hadd_pd(v2, v3);
    const __m256d lo = _mm256_permute2f128_pd(t0, t1, 0x20);
    const __m256d hi = _mm256_permute2f128_pd(t0, t1, 0x31);
    return _mm256_add_pd(lo, hi);
}

inline double dot(const double* a, const double* b, std::size_t K) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= K; k += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc);
    double s = hsum(acc);
    for (; k < K; ++k) s += a[k] * b[k];
    return s;
}

}  // namespace

void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             const double* bias, double* C) {
    const std::size_t K4 = K & ~std::size_t{3};
    std::size_t m = 0;
    for (; m + 2 <= M; m += 2) {
        const double* a0 = A + m * K;
        const double* a1 = a0 + K;
        std::size_t n = 0;
        for (; n + 4 <= N; n += 4) {
            const double* b0 = B + n * K;
            const double* b1 = b0 + K;
            const double* b2 = b1 + K;
            const double* b3 = b2 + K;
            __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
            __m256d c02 = _mm256_setzero_pd(), c03 = _mm256_setzero_pd();
            __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
            __m256d c12 = _mm256_setzero_pd(), c13 = _mm256_setzero_pd();
            for (std::size_t k = 0; k < K4; k += 4) {
                const __m256d va0 = _mm256_loadu_pd(a0 + k);
                const __m256d va1 = _mm256_loadu_pd(a1 + k);
                __m256d vb = _mm256_loadu_pd(b0 + k);
                c00 = _mm256_fmadd_pd(va0, vb, c00);
                c10 = _mm256_fmadd_pd(va1, vb, c10);
                vb = _mm256_loadu_pd(b1 + k);
                c01 = _mm256_fmadd_pd(va0, vb, c01);
                c11 = _mm256_fmadd_pd(va1, vb, c11);
                vb = _mm256_loadu_pd(b2 + k);
                c02 = _mm256_fmadd_pd(va0, vb, c02);
                c12 = _mm256_fmadd_pd(va1, vb, c12);
                vb = _mm256_loadu_pd(b3 + k);
                c03 = _mm256_fmadd_pd(va0, vb, c03);
                c13 = _mm256_fmadd_pd(va1, vb, c13);
            }
            __m256d r0 = hsum4(c00, c01, c02, c03);
            __m256d r1 = hsum4(c10, c11, c12, c13);
            if (K4 != K) {
                alignas(32) double t0[4] = {0, 0, 0, 0};
                alignas(32) double t1[4] = {0, 0, 0, 0};
                for (std::size_t j = 0; j < 4; ++j) {
                    const double* b = B + (n + j) * K;
                    for (std::size_t k = K4; k < K; ++k) {
                        t0[j] += a0[k] * b[k];
                        t1[j] += a1[k] * b[k];
                    }
                }
                r0 = _mm256_add_pd(r0, _mm256_load_pd(t0));
                r1 = _mm256_add_pd(r1, _mm256_load_pd(t1));
            }
            if (bias) {
                const __m256d vbias = _mm256_loadu_pd(bias + n);
                r0 = _mm256_add_pd(r0, vbias);
                r1 = _mm256_add_pd(r1, vbias);
            }
            _mm256_storeu_pd(C + m * N + n, r0);
            _mm256_storeu_pd(C + (m + 1) * N + n, r1);
        }
        for (; n < N; ++n) {
            const double* b = B + n * K;
            const double bb = bias ? bias[n] : 0.0;
            C[m * N + n] = bb + dot(a0, b, K);
            C[(m + 1) * N + n] = bb + dot(a1, b, K);
        }
    }
    for (; m < M; ++m) {
        const double* a = A + m * K;
        for (std::size_t n = 0; n < N; ++n) C[m * N + n] = (bias ? bias[n] : 0.0) + dot(a, B + n * K, K);
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_tn_acc(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
                 double* C) {
    for (std::size_t k = 0; k < K; ++k) {
        const double* b = B + k * N;
        for (std::size_t m = 0; m < M; ++m) {
            const double a = A[k * M + m];
            if (a == 0.0) continue;
            axpy(N, a, b, C + m * N);
        }
    }
}

void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             double* C) {
    for (std::size_t m = 0; m < M; ++m) {
        double* c = C + m * N;
        for (std::size_t n = 0; n < N; ++n) c[n] = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double a = A[m * K + k];
            if (a == 0.0) continue;
            axpy(N, a, B + k * N, c);
        }
    }
}

}  // namespace safedqn::kernels::avx2
