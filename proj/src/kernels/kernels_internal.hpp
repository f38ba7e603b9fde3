#pragma once

#include <cstddef>

namespace safedqn::kernels::scalar {
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             const double* bias, double* C);
void gemm_tn_acc(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
                 double* C);
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             double* C);
void axpy(std::size_t n, double alpha, const double* x, double* y);
}  // namespace safedqn::kernels::scalar

#if defined(SAFEDQN_HAVE_AVX2)
namespace safedqn::kernels::avx2 {
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             const double* bias, double* C);
void gemm_tn_acc(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
                 double* C);
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const double* A, const double* B,
             double* C);
void axpy(std::size_t n, double alpha, const double* x, double* y);
}  // namespace safedqn::kernels::avx2
#endif
