#include "kernels_internal.hpp"

namespace safedqn::kernels::scalar {

void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             const double* bias, double* C) {
    for (std::size_t m = 0; m < M; ++m) {
        const double* a = A + m * K;
        for (std::size_t n = 0; n < N; ++n) {
            const double* b = B + n * K;
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
            C[m * N + n] = (bias ? bias[n] : 0.0) + acc;
        }
    }
}

void gemm_tn_acc(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
                 double* C) {
    for (std::size_t k = 0; k < K; ++k) {
        const double* b = B + k * N;
        for (std::size_t m = 0; m < M; ++m) {
            const double a = A[k * M + m];
            if (a == 0.0) continue;
            double* c = C + m * N;
            for (std::size_t n = 0; n < N; ++n) c[n] += a * b[n];
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
            const double* b = B + k * N;
            for (std::size_t n = 0; n < N; ++n) c[n] += a * b[n];
        }
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace safedqn::kernels::scalar
