#include "fedcross/simd.hpp"

#include <cmath>

namespace fedcross::simd::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void abs_values(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(x[i]);
}

double sum_squares(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void snr_batch(const double* power, const double* gain, const double* fading, double noise,
               double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = power[i] * gain[i] * fading[i] / noise;
}

void dominance_row(const double* objectives, std::size_t n, std::size_t m, std::size_t i,
                   std::uint8_t* beats, std::uint8_t* beaten_by) {
    for (std::size_t j = 0; j < n; ++j) {
        bool i_le = true, i_lt = false, j_le = true, j_lt = false;
        for (std::size_t k = 0; k < m; ++k) {
            const double a = objectives[k * n + i];
            const double b = objectives[k * n + j];
            i_le = i_le && (a <= b);
            i_lt = i_lt || (a < b);
            j_le = j_le && (b <= a);
            j_lt = j_lt || (b < a);
        }
        beats[j] = static_cast<std::uint8_t>(i_le && i_lt);
        beaten_by[j] = static_cast<std::uint8_t>(j_le && j_lt);
    }
}

}  // namespace fedcross::simd::scalar
