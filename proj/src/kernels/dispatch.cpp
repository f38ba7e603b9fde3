#include "safedqn/kernels.hpp"

#include "kernels_internal.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace safedqn::kernels {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, &scalar::gemm_nt, &scalar::gemm_tn_acc, &scalar::gemm_nn,
                              &scalar::axpy};

#if defined(SAFEDQN_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, &avx2::gemm_nt, &avx2::gemm_tn_acc, &avx2::gemm_nn,
                            &avx2::axpy};
#endif

const KernelTable* select_initial() noexcept {
    if (const char* forced = std::getenv("SAFEDQN_KERNELS")) {
        if (std::string_view(forced) == "scalar") return &kScalar;
    }
#if defined(SAFEDQN_HAVE_AVX2)
    if (cpu_supports_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> table{select_initial()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(SAFEDQN_HAVE_AVX2)
    return cpu_supports_avx2() ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

bool cpu_supports_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

bool set_active(Isa isa) noexcept {
    if (isa == Isa::Scalar) {
        slot().store(&kScalar, std::memory_order_release);
        return true;
    }
    const KernelTable* t = avx2_table();
    if (!t) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace safedqn::kernels
