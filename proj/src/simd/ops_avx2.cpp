// AVX2 variants of the inner-loop primitives. This translation unit is the
// only one compiled with -mavx2 -mfma; it is selected at runtime after CPU
// detection (see ops.cpp).

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace kpc::simd::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) result += a[i] * b[i];
    return result;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        result += d * d;
    }
    return result;
}

double l1dist_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double result = hsum(acc);
    for (; i < n; ++i) result += std::fabs(a[i] - b[i]);
    return result;
}

double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double result = hsum(acc);
    for (; i < n; ++i) result += a[i];
    return result;
}

void sqdist_row_avx2(const double* q, const double* points, std::size_t count,
                     std::size_t dim, double* out) {
    if (dim == 1) {
        // Vectorize across points for the dominant 1-d case.
        const __m256d qv = _mm256_set1_pd(q[0]);
        std::size_t j = 0;
        for (; j + 4 <= count; j += 4) {
            const __m256d d = _mm256_sub_pd(qv, _mm256_loadu_pd(points + j));
            _mm256_storeu_pd(out + j, _mm256_mul_pd(d, d));
        }
        for (; j < count; ++j) {
            const double d = q[0] - points[j];
            out[j] = d * d;
        }
        return;
    }
    if (dim == 2) {
        const __m256d qv = _mm256_set_pd(q[1], q[0], q[1], q[0]);
        std::size_t j = 0;
        for (; j + 2 <= count; j += 2) {
            const __m256d d = _mm256_sub_pd(qv, _mm256_loadu_pd(points + 2 * j));
            const __m256d sq = _mm256_mul_pd(d, d);
            const __m256d sq_swapped = _mm256_permute_pd(sq, 0b0101);
            const __m256d pair = _mm256_add_pd(sq, sq_swapped);
            out[j] = _mm_cvtsd_f64(_mm256_castpd256_pd128(pair));
            out[j + 1] = _mm_cvtsd_f64(_mm256_extractf128_pd(pair, 1));
        }
        for (; j < count; ++j) {
            const double d0 = q[0] - points[2 * j];
            const double d1 = q[1] - points[2 * j + 1];
            out[j] = d0 * d0 + d1 * d1;
        }
        return;
    }
    for (std::size_t j = 0; j < count; ++j) out[j] = sqdist_avx2(q, points + j * dim, dim);
}

}  // namespace kpc::simd::detail

#endif  // x86_64
