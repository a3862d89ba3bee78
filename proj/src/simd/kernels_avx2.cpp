// Compiled with -mavx2 only; never called unless cpu_has_avx2() is true.
#include "fedcross/simd.hpp"

#include <immintrin.h>

#include <cmath>

namespace fedcross::simd::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(pair, pair);
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

}  // namespace

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void abs_values(const double* x, double* out, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_andnot_pd(sign, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = std::fabs(x[i]);
}

double sum_squares(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
    }
    double total = horizontal_sum(acc);
    for (; i < n; ++i) total += x[i] * x[i];
    return total;
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    double total = horizontal_sum(acc);
    for (; i < n; ++i) total += x[i] * y[i];
    return total;
}

void snr_batch(const double* power, const double* gain, const double* fading, double noise,
               double* out, std::size_t n) {
    const __m256d vn = _mm256_set1_pd(noise);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d v = _mm256_mul_pd(_mm256_loadu_pd(power + i), _mm256_loadu_pd(gain + i));
        v = _mm256_mul_pd(v, _mm256_loadu_pd(fading + i));
        _mm256_storeu_pd(out + i, _mm256_div_pd(v, vn));
    }
    for (; i < n; ++i) out[i] = power[i] * gain[i] * fading[i] / noise;
}

void dominance_row(const double* objectives, std::size_t n, std::size_t m, std::size_t i,
                   std::uint8_t* beats, std::uint8_t* beaten_by) {
    std::size_t j = 0;
    for (; j + kLanes <= n; j += kLanes) {
        __m256d i_le = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
        __m256d j_le = i_le;
        __m256d i_lt = _mm256_setzero_pd();
        __m256d j_lt = _mm256_setzero_pd();
        for (std::size_t k = 0; k < m; ++k) {
            const __m256d a = _mm256_set1_pd(objectives[k * n + i]);
            const __m256d b = _mm256_loadu_pd(objectives + k * n + j);
            i_le = _mm256_and_pd(i_le, _mm256_cmp_pd(a, b, _CMP_LE_OQ));
            i_lt = _mm256_or_pd(i_lt, _mm256_cmp_pd(a, b, _CMP_LT_OQ));
            j_le = _mm256_and_pd(j_le, _mm256_cmp_pd(b, a, _CMP_LE_OQ));
            j_lt = _mm256_or_pd(j_lt, _mm256_cmp_pd(b, a, _CMP_LT_OQ));
        }
        const int fwd = _mm256_movemask_pd(_mm256_and_pd(i_le, i_lt));
        const int bwd = _mm256_movemask_pd(_mm256_and_pd(j_le, j_lt));
        for (std::size_t lane = 0; lane < kLanes; ++lane) {
            beats[j + lane] = static_cast<std::uint8_t>((fwd >> lane) & 1);
            beaten_by[j + lane] = static_cast<std::uint8_t>((bwd >> lane) & 1);
        }
    }
    if (j < n) {
        // Scalar tail.
        for (; j < n; ++j) {
            bool il = true, it = false, jl = true, jt = false;
            for (std::size_t k = 0; k < m; ++k) {
                const double a = objectives[k * n + i];
                const double b = objectives[k * n + j];
                il = il && (a <= b);
                it = it || (a < b);
                jl = jl && (b <= a);
                jt = jt || (b < a);
            }
            beats[j] = static_cast<std::uint8_t>(il && it);
            beaten_by[j] = static_cast<std::uint8_t>(jl && jt);
        }
    }
}

}  // namespace fedcross::simd::avx2
