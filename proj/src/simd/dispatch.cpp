#include "fedcross/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace fedcross::simd {

namespace {

Isa detect_default() {
    if (const char* env = std::getenv("FEDCROSS_ISA")) {
        const std::string want(env);
        if (want == "scalar") return Isa::scalar;
        if (want == "avx2" && cpu_has_avx2()) return Isa::avx2;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect_default()};
    return isa;
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool has = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") != 0;
    }();
    return has;
#else
    return false;
#endif
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (isa == Isa::avx2 && !cpu_has_avx2()) {
        throw std::runtime_error("AVX2 kernels requested but the CPU does not support AVX2");
    }
    current().store(isa, std::memory_order_relaxed);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    require_same_size(x.size(), y.size(), "axpy");
    if (active_isa() == Isa::avx2) return avx2::axpy(a, x.data(), y.data(), x.size());
    scalar::axpy(a, x.data(), y.data(), x.size());
}

void abs_values(std::span<const double> x, std::span<double> out) {
    require_same_size(x.size(), out.size(), "abs_values");
    if (active_isa() == Isa::avx2) return avx2::abs_values(x.data(), out.data(), x.size());
    scalar::abs_values(x.data(), out.data(), x.size());
}

double sum_squares(std::span<const double> x) {
    if (active_isa() == Isa::avx2) return avx2::sum_squares(x.data(), x.size());
    return scalar::sum_squares(x.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
    require_same_size(x.size(), y.size(), "dot");
    if (active_isa() == Isa::avx2) return avx2::dot(x.data(), y.data(), x.size());
    return scalar::dot(x.data(), y.data(), x.size());
}

void snr_batch(std::span<const double> power, std::span<const double> gain,
               std::span<const double> fading, double noise, std::span<double> out) {
    require_same_size(power.size(), gain.size(), "snr_batch");
    require_same_size(power.size(), fading.size(), "snr_batch");
    require_same_size(power.size(), out.size(), "snr_batch");
    if (active_isa() == Isa::avx2) {
        return avx2::snr_batch(power.data(), gain.data(), fading.data(), noise, out.data(),
                               out.size());
    }
    scalar::snr_batch(power.data(), gain.data(), fading.data(), noise, out.data(), out.size());
}

void dominance_row(std::span<const double> objectives, std::size_t n, std::size_t m,
                   std::size_t i, std::span<std::uint8_t> beats,
                   std::span<std::uint8_t> beaten_by) {
    if (objectives.size() != n * m || beats.size() != n || beaten_by.size() != n || i >= n) {
        throw std::invalid_argument("dominance_row: inconsistent shapes");
    }
    if (active_isa() == Isa::avx2) {
        return avx2::dominance_row(objectives.data(), n, m, i, beats.data(), beaten_by.data());
    }
    scalar::dominance_row(objectives.data(), n, m, i, beats.data(), beaten_by.data());
}

}  // namespace fedcross::simd
