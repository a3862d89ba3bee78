#include "fedcross/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedcross/simd.hpp"

namespace fedcross::channel {

void ChannelParams::validate() const {
    if (!(beta_mean > 0.0) || !(p_max > 0.0) || !(sigma_w2 > 0.0) || block_length < 1) {
        throw std::invalid_argument(
            "ChannelParams: beta_mean, p_max, sigma_w2 must be > 0 and block_length >= 1");
    }
}

void PrivacySpec::validate() const {
    if (!(sigma_p2 >= 0.0) || !std::isfinite(sigma_p2)) {
        throw std::invalid_argument("PrivacySpec: sigma_p2 must be finite and >= 0");
    }
}

void CompressionSpec::validate() const {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        throw std::invalid_argument("CompressionSpec: keep_fraction must lie in (0, 1]");
    }
}

ChannelState sample_channel(const ChannelParams& params, std::uint64_t round,
                            std::uint64_t stream_seed) {
    params.validate();
    const std::uint64_t block = round / params.block_length;
    Rng rng = make_rng(stream_seed, {block});
    // Rayleigh envelope: |h|^2 is unit-mean exponential.
    std::exponential_distribution<double> fading(1.0);
    return ChannelState{params.beta_mean, fading(rng), params.p_max};
}

double capacity(const ChannelState& state, const ChannelParams& params) {
    if (!std::isfinite(state.power) || !std::isfinite(state.beta) ||
        !std::isfinite(state.h_mag2) || !std::isfinite(params.sigma_w2)) {
        throw std::invalid_argument("capacity: non-finite input");
    }
    if (!(params.sigma_w2 > 0.0)) throw std::invalid_argument("capacity: sigma_w2 must be > 0");
    const double snr = state.power * state.beta * state.h_mag2 / params.sigma_w2;
    return std::log2(1.0 + snr);
}

void capacity_batch(std::span<const ChannelState> states, double sigma_w2,
                    std::span<double> out) {
    if (states.size() != out.size()) throw std::invalid_argument("capacity_batch: size mismatch");
    if (!(sigma_w2 > 0.0) || !std::isfinite(sigma_w2)) {
        throw std::invalid_argument("capacity_batch: sigma_w2 must be finite and > 0");
    }
    const std::size_t n = states.size();
    std::vector<double> power(n), beta(n), fading(n);
    for (std::size_t i = 0; i < n; ++i) {
        power[i] = states[i].power;
        beta[i] = states[i].beta;
        fading[i] = states[i].h_mag2;
    }
    simd::snr_batch(power, beta, fading, sigma_w2, out);
    for (double& q : out) {
        if (!std::isfinite(q)) throw std::invalid_argument("capacity_batch: non-finite input");
        q = std::log2(1.0 + q);
    }
}

std::vector<double> perturb_gradient(std::span<const double> g, const PrivacySpec& spec,
                                     Rng& rng) {
    spec.validate();
    std::vector<double> out(g.begin(), g.end());
    if (!spec.enabled || spec.sigma_p2 == 0.0) return out;
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> noise(g.size());
    for (double& z : noise) z = unit(rng);
    simd::axpy(std::sqrt(spec.sigma_p2), noise, out);
    return out;
}

std::size_t retained_count(std::size_t d, const CompressionSpec& spec) {
    spec.validate();
    if (spec.mode == CompressionMode::none) return d;
    // The epsilon keeps products like 0.3 * 10 = 3.0000000000000004 at 3.
    const double raw = spec.keep_fraction * static_cast<double>(d);
    const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(k, 1, d);
}

std::vector<double> compress(std::span<const double> g, const CompressionSpec& spec) {
    if (g.empty()) throw std::invalid_argument("compress: empty vector");
    const std::size_t keep = retained_count(g.size(), spec);
    std::vector<double> out(g.begin(), g.end());
    if (keep == g.size()) return out;

    std::vector<double> magnitude(g.size());
    simd::abs_values(g, magnitude);
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (magnitude[a] != magnitude[b]) return magnitude[a] > magnitude[b];
                         return a < b;
                     });
    std::vector<char> kept(g.size(), 0);
    for (std::size_t i = 0; i < keep; ++i) kept[order[i]] = 1;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!kept[i]) out[i] = 0.0;
    }
    return out;
}

}  // namespace fedcross::channel
