#pragma once

// Dense linear-algebra kernels used by the Q-networks.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is picked once at startup from the CPU
// feature flags; SAFEDQN_KERNELS=scalar in the environment forces the
// reference path. All matrices are dense row-major.

#include <cstddef>
#include <string_view>

namespace safedqn::kernels {

enum class Isa { Scalar, Avx2 };

// C[m][n] = bias[n] + sum_k A[m][k] * B[n][k]      (A: MxK, B: NxK, C: MxN)
// bias may be null.
using GemmNtFn = void (*)(std::size_t M, std::size_t N, std::size_t K, const double* A,
                          const double* B, const double* bias, double* C);

// C[m][n] += sum_k A[k][m] * B[k][n]                (A: KxM, B: KxN, C: MxN)
using GemmTnAccFn = void (*)(std::size_t M, std::size_t N, std::size_t K, const double* A,
                             const double* B, double* C);

// C[m][n] = sum_k A[m][k] * B[k][n]                 (A: MxK, B: KxN, C: MxN)
using GemmNnFn = void (*)(std::size_t M, std::size_t N, std::size_t K, const double* A,
                          const double* B, double* C);

// y[i] += alpha * x[i]
using AxpyFn = void (*)(std::size_t n, double alpha, const double* x, double* y);

struct KernelTable {
    Isa isa;
    GemmNtFn gemm_nt;
    GemmTnAccFn gemm_tn_acc;
    GemmNnFn gemm_nn;
    AxpyFn axpy;
};

const KernelTable& scalar_table() noexcept;

// Null when the build has no AVX2 path.
const KernelTable* avx2_table() noexcept;

bool cpu_supports_avx2() noexcept;

// Table selected for this process.
const KernelTable& active() noexcept;

// Overrides the selection. Returns false (and changes nothing) when the
// requested ISA is unavailable on this CPU or build.
bool set_active(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

}  // namespace safedqn::kernels
