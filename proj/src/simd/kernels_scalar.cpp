#include "forchflow/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace forchflow::simd {

namespace {

double dotScalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sumSquaresScalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double maxAbsScalar(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

void axpbyScalar(double* out, double alpha, const double* x, double beta, const double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void stencilApplyScalar(const StencilView& op, const double* padded, double* out) {
    const std::size_t stride = op.nx + 2;
    for (std::size_t j = 0; j < op.ny; ++j) {
        const double* rows[3] = {padded + j * stride, padded + (j + 1) * stride, padded + (j + 2) * stride};
        for (std::size_t i = 0; i < op.nx; ++i) {
            const std::size_t c = j * op.nx + i;
            double acc = 0.0;
            for (int k = 0; k < 9; ++k) {
                if (op.coeff[k] == nullptr) continue;
                acc += op.coeff[k][c] * rows[k / 3][i + static_cast<std::size_t>(k % 3)];
            }
            out[c] = acc;
        }
    }
}

}  // namespace

const KernelTable& scalarKernels() {
    static const KernelTable table{"scalar", dotScalar, sumSquaresScalar, maxAbsScalar, axpbyScalar,
                                   stencilApplyScalar};
    return table;
}

}  // namespace forchflow::simd
