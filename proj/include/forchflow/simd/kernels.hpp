#pragma once

// Data-parallel inner loops of the Krylov solver and the field norms.
// Every kernel has a scalar reference and, where the CPU allows, an AVX2
// variant. activeKernels() picks one at startup; the equivalence tests
// compare the two tables on random inputs.

#include <cstddef>
#include <span>
#include <string_view>

namespace forchflow::simd {

/// Nine-point stencil operator on an nx x ny cell grid (x fastest).
/// coeff[k] holds the weight of neighbour (dx, dy) = (k % 3 - 1, k / 3 - 1)
/// for every cell; the input vector is padded by one ghost cell per side.
struct StencilView {
    std::size_t nx = 0;
    std::size_t ny = 0;
    const double* coeff[9] = {};
};

struct KernelTable {
    std::string_view name;
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*sumSquares)(const double* x, std::size_t n);
    double (*maxAbs)(const double* x, std::size_t n);
    /// out = alpha * x + beta * y; out may alias x or y.
    void (*axpby)(double* out, double alpha, const double* x, double beta, const double* y, std::size_t n);
    /// out[c] = sum_k coeff[k][c] * padded[neighbour_k(c)]
    void (*stencilApply)(const StencilView& op, const double* padded, double* out);
};

const KernelTable& scalarKernels();

/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2Kernels();

/// AVX2 when available unless FORCHFLOW_SIMD=scalar is set in the environment.
const KernelTable& activeKernels();

inline std::size_t paddedIndex(std::size_t nx, std::size_t i, std::size_t j) { return (j + 1) * (nx + 2) + (i + 1); }

}  // namespace forchflow::simd
