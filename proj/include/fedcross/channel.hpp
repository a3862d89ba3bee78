#pragma once
// Uplink channel model: block fading, Shannon capacity, Gaussian gradient
// perturbation and top-fraction sparsification.

#include <cstdint>
#include <span>
#include <vector>

#include "fedcross/rng.hpp"

namespace fedcross::channel {

struct ChannelParams {
    double beta_mean = 1.0;   // large-scale fading gain
    double p_max = 0.2;       // W
    double sigma_w2 = 0.02;   // AWGN power, W
    std::uint64_t block_length = 1;  // rounds per fading block

    void validate() const;
};

struct ChannelState {
    double beta = 0.0;
    double h_mag2 = 0.0;  // |h|^2
    double power = 0.0;   // W
};

struct PrivacySpec {
    double sigma_p2 = 0.0;
    bool enabled = false;

    void validate() const;
};

enum class CompressionMode { none, top_fraction };

struct CompressionSpec {
    CompressionMode mode = CompressionMode::none;
    double keep_fraction = 1.0;

    void validate() const;
};

// Draws the state for `round`. The state depends only on (params, the block
// containing `round`, stream_seed): rounds inside one block share it.
ChannelState sample_channel(const ChannelParams& params, std::uint64_t round,
                            std::uint64_t stream_seed);

// Spectral efficiency log2(1 + P·β·|h|²/σ²) in bits/s/Hz.
double capacity(const ChannelState& state, const ChannelParams& params);

// Capacity for many users at once; all users share sigma_w2.
void capacity_batch(std::span<const ChannelState> states, double sigma_w2,
                    std::span<double> out);

// g + ξ with ξ ~ N(0, σ_p² I). Identity when disabled or σ_p² = 0.
std::vector<double> perturb_gradient(std::span<const double> g, const PrivacySpec& spec,
                                     Rng& rng);

// Keeps the ceil(keep_fraction·d) largest-magnitude coordinates (ties to the
// lower index) and zeroes the rest. Throws on an empty vector.
std::vector<double> compress(std::span<const double> g, const CompressionSpec& spec);

// Number of coordinates compress() retains for a d-dimensional input.
std::size_t retained_count(std::size_t d, const CompressionSpec& spec);

}  // namespace fedcross::channel
