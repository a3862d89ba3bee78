#pragma once
// Data-parallel kernels used by the channel, evolutionary-game and migration
// code paths. Every kernel has a scalar reference implementation and an AVX2
// variant; the variant is chosen once at runtime from CPUID and can be
// overridden with FEDCROSS_ISA=scalar|avx2 or set_isa().

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace fedcross::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// True when the running CPU can execute the AVX2 kernels.
bool cpu_has_avx2();

// Kernel set currently used by the dispatching entry points below.
Isa active_isa();

// Forces a kernel set. Requesting avx2 on a CPU without it throws
// std::runtime_error.
void set_isa(Isa isa);

// RAII override, mostly for tests.
class ScopedIsa {
public:
    explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }
    ~ScopedIsa() { set_isa(previous_); }
    ScopedIsa(const ScopedIsa&) = delete;
    ScopedIsa& operator=(const ScopedIsa&) = delete;

private:
    Isa previous_;
};

// y[i] += a * x[i]. Elementwise; bitwise identical across kernel sets.
void axpy(double a, std::span<const double> x, std::span<double> y);

// out[i] = |x[i]|. Bitwise identical across kernel sets.
void abs_values(std::span<const double> x, std::span<double> out);

// Σ x[i]². Lane-parallel reduction: kernel sets agree to rounding only.
double sum_squares(std::span<const double> x);

// Σ x[i]·y[i]. Same rounding caveat as sum_squares.
double dot(std::span<const double> x, std::span<const double> y);

// out[i] = power[i] * gain[i] * fading[i] / noise. Bitwise identical across
// kernel sets (two multiplies and one divide per lane, no contraction).
void snr_batch(std::span<const double> power, std::span<const double> gain,
               std::span<const double> fading, double noise, std::span<double> out);

// Pairwise Pareto dominance of one row against a population stored
// objective-major: objectives[k * n + j] is objective k of individual j.
// For every j: beats[j] = 1 iff i dominates j, beaten_by[j] = 1 iff j
// dominates i (minimisation). Exact across kernel sets.
void dominance_row(std::span<const double> objectives, std::size_t n, std::size_t m,
                   std::size_t i, std::span<std::uint8_t> beats,
                   std::span<std::uint8_t> beaten_by);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
void abs_values(const double* x, double* out, std::size_t n);
double sum_squares(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void snr_batch(const double* power, const double* gain, const double* fading, double noise,
               double* out, std::size_t n);
void dominance_row(const double* objectives, std::size_t n, std::size_t m, std::size_t i,
                   std::uint8_t* beats, std::uint8_t* beaten_by);
}  // namespace scalar

namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
void abs_values(const double* x, double* out, std::size_t n);
double sum_squares(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void snr_batch(const double* power, const double* gain, const double* fading, double noise,
               double* out, std::size_t n);
void dominance_row(const double* objectives, std::size_t n, std::size_t m, std::size_t i,
                   std::uint8_t* beats, std::uint8_t* beaten_by);
}  // namespace avx2

}  // namespace fedcross::simd
