// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "forchflow/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <immintrin.h>

namespace forchflow::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sumSquares(const double* x, std::size_t n) { return dot(x, x, n); }

double maxAbs(const double* x, std::size_t n) {
    const __m256d signMask = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_andnot_pd(signMask, _mm256_loadu_pd(x + i)));
    double r = hmax(m);
    for (; i < n; ++i) r = std::max(r, std::abs(x[i]));
    return r;
}

void axpby(double* out, double alpha, const double* x, double beta, const double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void stencilApply(const StencilView& op, const double* padded, double* out) {
    const std::size_t stride = op.nx + 2;
    for (std::size_t j = 0; j < op.ny; ++j) {
        const double* rows[3] = {padded + j * stride, padded + (j + 1) * stride, padded + (j + 2) * stride};
        const std::size_t base = j * op.nx;
        std::size_t i = 0;
        for (; i + 4 <= op.nx; i += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (int k = 0; k < 9; ++k) {
                if (op.coeff[k] == nullptr) continue;
                const __m256d a = _mm256_loadu_pd(op.coeff[k] + base + i);
                const __m256d v = _mm256_loadu_pd(rows[k / 3] + i + static_cast<std::size_t>(k % 3));
                acc = _mm256_fmadd_pd(a, v, acc);
            }
            _mm256_storeu_pd(out + base + i, acc);
        }
        for (; i < op.nx; ++i) {
            double acc = 0.0;
            for (int k = 0; k < 9; ++k) {
                if (op.coeff[k] == nullptr) continue;
                acc += op.coeff[k][base + i] * rows[k / 3][i + static_cast<std::size_t>(k % 3)];
            }
            out[base + i] = acc;
        }
    }
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{"avx2", dot, sumSquares, maxAbs, axpby, stencilApply};
    return t;
}

}  // namespace forchflow::simd::avx2
