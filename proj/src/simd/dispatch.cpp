#include "forchflow/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace forchflow::simd {

#if defined(FORCHFLOW_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2Kernels() {
#if defined(FORCHFLOW_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& activeKernels() {
    static const KernelTable* chosen = [] {
        const char* env = std::getenv("FORCHFLOW_SIMD");
        if (env != nullptr && std::string_view(env) == "scalar") return &scalarKernels();
        const KernelTable* fast = avx2Kernels();
        return fast != nullptr ? fast : &scalarKernels();
    }();
    return *chosen;
}

}  // namespace forchflow::simd
