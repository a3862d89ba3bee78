#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>
#include <vector>

#include "fedcross/channel.hpp"
#include "fedcross/simd.hpp"

using namespace fedcross;
using namespace fedcross::channel;

namespace {

double norm2(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

TEST_CASE("sample_channel is deterministic and block constant") {
    ChannelParams p;
    CHECK(sample_channel(p, 4, 99).h_mag2 == sample_channel(p, 4, 99).h_mag2);
    CHECK(sample_channel(p, 4, 99).h_mag2 != sample_channel(p, 4, 100).h_mag2);
    p.block_length = 2;
    CHECK(sample_channel(p, 6, 7).h_mag2 == sample_channel(p, 7, 7).h_mag2);
    CHECK(sample_channel(p, 7, 7).h_mag2 != sample_channel(p, 8, 7).h_mag2);
    const auto s = sample_channel(p, 0, 1);
    CHECK(s.power == p.p_max);
    CHECK(s.beta == p.beta_mean);
}

TEST_CASE("small-scale fading has unit mean") {
    ChannelParams p;
    double sum = 0.0;
    const int n = 100000;
    for (int r = 0; r < n; ++r) sum += sample_channel(p, static_cast<std::uint64_t>(r), 2024).h_mag2;
    CHECK(std::fabs(sum / n - 1.0) < 0.02);
}

TEST_CASE("capacity anchors and closed form") {
    ChannelParams p;
    p.sigma_w2 = 1.0;
    CHECK(capacity({1.0, 1.0, 0.0}, p) == 0.0);
    CHECK(capacity({1.0, 1.0, 1.0}, p) == 1.0);
    CHECK(capacity({1.0, 1.0, 3.0}, p) == 2.0);
    p.sigma_w2 = 0.25;
    CHECK(capacity({2.0, 1.0, 0.5}, p) == doctest::Approx(2.321928094887362).epsilon(1e-15));
    CHECK_THROWS_AS(capacity({NAN, 1.0, 1.0}, p), std::invalid_argument);
    CHECK_THROWS_AS(capacity({1.0, INFINITY, 1.0}, p), std::invalid_argument);
}

TEST_CASE("capacity_batch matches scalar capacity in every kernel set") {
    ChannelParams p;
    std::vector<ChannelState> states;
    for (std::uint64_t u = 0; u < 37; ++u) states.push_back(sample_channel(p, 0, u));
    std::vector<double> want(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) want[i] = capacity(states[i], p);
    for (auto isa : {simd::Isa::scalar, simd::Isa::avx2}) {
        if (isa == simd::Isa::avx2 && !simd::cpu_has_avx2()) continue;
        simd::ScopedIsa guard(isa);
        std::vector<double> got(states.size());
        capacity_batch(states, p.sigma_w2, got);
        CHECK(got == want);
    }
}

TEST_CASE("perturbation identity cases and variance") {
    Rng rng(5);
    const std::vector<double> g{1.0, 2.0, 3.0};
    CHECK(perturb_gradient(g, {0.0, true}, rng) == g);
    CHECK(perturb_gradient(g, {4.0, false}, rng) == g);

    const std::size_t n = 100000;
    const std::vector<double> zero(n, 0.0);
    const auto noisy = perturb_gradient(zero, {4.0, true}, rng);
    double mean = 0.0, var = 0.0;
    for (double v : noisy) mean += v;
    mean /= n;
    for (double v : noisy) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::fabs(var - 4.0) < 0.12);
    CHECK_THROWS_AS(perturb_gradient(g, {-1.0, true}, rng), std::invalid_argument);
}

TEST_CASE("compression examples") {
    const std::vector<double> g{3.0, -1.0, 2.0};
    CHECK(compress(g, {CompressionMode::none, 0.1}) == g);
    CHECK(compress(g, {CompressionMode::top_fraction, 1.0}) == g);
    CHECK(compress(std::vector<double>{3.0, -1.0, 2.0, 0.5}, {CompressionMode::top_fraction, 0.5}) ==
          std::vector<double>{3.0, 0.0, 2.0, 0.0});
    // Ties keep the lower index.
    CHECK(compress(std::vector<double>{1.0, -1.0, 1.0}, {CompressionMode::top_fraction, 0.5}) ==
          std::vector<double>{1.0, -1.0, 0.0});
    CHECK_THROWS_AS(compress(std::vector<double>{}, {}), std::invalid_argument);
    CHECK_THROWS_AS(compress(g, {CompressionMode::top_fraction, 0.0}), std::invalid_argument);
}

TEST_CASE("compression keeps exactly ceil(f*d) coordinates and never grows the norm") {
    Rng rng(6);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> dim(1, 200);
    std::uniform_real_distribution<double> frac(0.001, 1.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> g(dim(rng));
        for (double& v : g) v = unit(rng);
        const CompressionSpec spec{CompressionMode::top_fraction, frac(rng)};
        const auto c = compress(g, spec);
        const auto kept = static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](double v) { return v != 0.0; }));
        const auto want = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(spec.keep_fraction * g.size() - 1e-9)));
        CHECK(kept == std::min(want, g.size()));
        CHECK(kept == retained_count(g.size(), spec));
        CHECK(norm2(c) <= norm2(g));
    }
}

TEST_CASE("capacity is monotone in power, gain and fading") {
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 5.0), bump(0.0, 1.0);
    ChannelParams p;
    for (int t = 0; t < 10000; ++t) {
        const ChannelState s{u(rng), u(rng), u(rng)};
        const double q = capacity(s, p);
        CHECK(capacity({s.beta + bump(rng), s.h_mag2, s.power}, p) >= q);
        CHECK(capacity({s.beta, s.h_mag2 + bump(rng), s.power}, p) >= q);
        CHECK(capacity({s.beta, s.h_mag2, s.power + bump(rng)}, p) >= q);
    }
}

TEST_CASE("invalid channel params are rejected") {
    ChannelParams p;
    p.sigma_w2 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {};
    p.block_length = 0;
    CHECK_THROWS_AS(sample_channel(p, 0, 0), std::invalid_argument);
}
