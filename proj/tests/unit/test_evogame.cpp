#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "fedcross/evogame.hpp"

using namespace fedcross;
using namespace fedcross::evogame;

namespace {

PopulationState random_state(Rng& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> x(n);
    for (double& v : x) v = e(rng);
    return PopulationState::normalized(x);
}

GameParams three_region() {
    GameParams p = GameParams::defaults(3);
    p.data_volume = {1.0, 2.0, 1.5};
    return p;
}

}  // namespace

TEST_CASE("population state enforces the simplex") {
    CHECK_NOTHROW(PopulationState({0.2, 0.8}));
    CHECK_THROWS_AS(PopulationState({0.2, 0.7}), std::invalid_argument);
    CHECK_THROWS_AS(PopulationState({-0.1, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(PopulationState::normalized(std::vector<double>{0.0, 0.0}), std::invalid_argument);
    const auto x = PopulationState::normalized(std::vector<double>{0.3, 0.4, 0.5});
    CHECK(x[0] == doctest::Approx(0.25));
    CHECK(x[2] == doctest::Approx(5.0 / 12.0));
}

TEST_CASE("region utility examples") {
    GameParams one;
    one.rewards = {700.0};
    one.data_volume = {3.0};
    CHECK(region_utility(PopulationState::vertex(1, 0), 0, one, 2.0) == 700.0 - 20.0 * 2.0);

    GameParams two = GameParams::defaults(2);
    two.rewards = {600.0, 600.0};
    two.unit_cost = 0.0;
    const PopulationState half({0.5, 0.5});
    CHECK(region_utility(half, 0, two, 1.0) == 300.0);
    CHECK(region_utility(half, 1, two, 1.0) == 300.0);

    two.unit_cost = 1000.0;
    CHECK(region_utility(half, 0, two, 1.0) < 0.0);

    GameParams zero_mass = GameParams::defaults(2);
    zero_mass.data_volume = {0.0, 1.0};
    CHECK_THROWS_AS(region_utility(PopulationState::vertex(2, 0), 0, zero_mass, 1.0), std::domain_error);
}

TEST_CASE("transmission-time cost model divides by capacity") {
    GameParams p = GameParams::defaults(2);
    p.cost_model = CostModel::transmission_time;
    p.task_bits = 4.0;
    const PopulationState half({0.5, 0.5});
    CHECK(region_utility(half, 0, p, 2.0) == doctest::Approx(300.0 - 20.0 * 2.0));
    CHECK_THROWS_AS(region_utility(half, 0, p, 0.0), std::invalid_argument);
}

TEST_CASE("average utility examples and extended-precision oracle") {
    GameParams p = GameParams::defaults(3);
    p.rewards = {600.0, 600.0, 600.0};
    const std::vector<double> q(3, 1.0);
    const auto u_uniform = region_utilities(PopulationState::uniform(3), p, q);
    CHECK(average_utility(PopulationState::uniform(3), p, q) == doctest::Approx(u_uniform[0]).epsilon(1e-15));

    const auto v = PopulationState::vertex(3, 1);
    CHECK(average_utility(v, p, q) == region_utilities(v, p, q)[1]);

    Rng rng(21);
    const auto pr = three_region();
    const std::vector<double> qr{1.0, 2.5, 3.0};
    for (int t = 0; t < 200; ++t) {
        const auto x = random_state(rng, 3);
        long double mass = 0.0L;
        for (int b = 0; b < 3; ++b) mass += static_cast<long double>(x[b]) * pr.data_volume[b];
        long double avg = 0.0L;
        for (int b = 0; b < 3; ++b) {
            const long double u = pr.rewards[b] * (x[b] * pr.data_volume[b] / mass) - pr.unit_cost * qr[b];
            avg += u * x[b];
        }
        CHECK(std::fabs(average_utility(x, pr, qr) - static_cast<double>(avg)) < 1e-12 * std::max(1.0, std::fabs(static_cast<double>(avg))));
    }
}

TEST_CASE("replicator fixed points and two-region closed form") {
    GameParams p = GameParams::defaults(3);
    const auto q = default_capacity(3);
    for (std::size_t b = 0; b < 3; ++b) {
        const auto dx = replicator_rhs(PopulationState::vertex(3, b), p, q);
        for (double d : dx) CHECK(d == 0.0);
    }
    GameParams flat = p;
    flat.rewards = {600.0, 600.0, 600.0};
    for (double d : replicator_rhs(PopulationState::uniform(3), flat, q)) CHECK(d == 0.0);

    GameParams two = GameParams::defaults(2);
    two.learning_rate = 1.0;
    const std::vector<double> q2{1.0, 2.0};
    const PopulationState half({0.5, 0.5});
    const auto u = region_utilities(half, two, q2);
    CHECK(replicator_rhs(half, two, q2)[0] == doctest::Approx(0.25 * (u[0] - u[1])).epsilon(1e-14));
}

TEST_CASE("vertex start gives a constant trajectory detected at t = 0") {
    const auto p = GameParams::defaults(3);
    const auto q = default_capacity(3);
    const auto traj = integrate(PopulationState::vertex(3, 0), p, q, 0.01, 200);
    for (const auto& s : traj.states) CHECK(s == PopulationState::vertex(3, 0));
    const auto eq = detect_equilibrium(traj, 1e-4);
    REQUIRE(eq);
    CHECK(eq->time == 0.0);
}

TEST_CASE("detect_equilibrium is strict and needs the tail to stay below tol") {
    Trajectory t;
    for (int i = 0; i < 4; ++i) {
        t.times.push_back(i);
        t.states.push_back(PopulationState::uniform(2));
    }
    t.derivatives = {{1e-5, 0.0}, {1e-3, 0.0}, {1e-5, 0.0}, {2e-4, 0.0}};
    CHECK_FALSE(detect_equilibrium(t, 1e-4));
    t.derivatives.back() = {5e-5, 0.0};
    const auto eq = detect_equilibrium(t, 1e-4);
    REQUIRE(eq);
    CHECK(eq->index == 2);
    t.derivatives.back() = {1e-4, 0.0};
    CHECK_FALSE(detect_equilibrium(t, 1e-4));
}

TEST_CASE("default dynamics settle from every reported starting mix") {
    const auto p = GameParams::defaults(3);
    const auto q = default_capacity(3);
    const std::vector<std::vector<double>> starts{
        {0.18, 0.32, 0.50}, {0.25, 0.35, 0.4}, {0.3, 0.4, 0.5}, {0.15, 0.25, 0.35}};
    for (const auto& s : starts) {
        const auto traj = integrate(PopulationState::normalized(s), p, q, 0.01, 50000);
        for (const auto& x : traj.states) {
            double sum = 0.0;
            for (double v : x.values()) sum += v;
            CHECK(std::fabs(sum - 1.0) < 1e-9);
        }
        const auto eq = detect_equilibrium(traj, 1e-4);
        REQUIRE(eq);
        CHECK(eq->time <= 500.0);
        CHECK(std::fabs(lyapunov_derivative(eq->state, p, q)) < 1e-3);
    }
}

TEST_CASE("Euler error halves with the step size") {
    const auto p = three_region();
    const std::vector<double> q{3.0, 3.2, 3.4};
    const auto x0 = PopulationState::normalized(std::vector<double>{0.3, 0.3, 0.4});
    const double horizon = 40.0;
    auto final_state = [&](double dt) {
        return integrate(x0, p, q, dt, static_cast<std::size_t>(std::llround(horizon / dt))).states.back();
    };
    const auto ref = final_state(0.05 / 4.0);
    auto err = [&](const PopulationState& s) {
        double e = 0.0;
        for (std::size_t b = 0; b < 3; ++b) e = std::max(e, std::fabs(s[b] - ref[b]));
        return e;
    };
    const double coarse = err(final_state(0.1));
    const double fine = err(final_state(0.05));
    REQUIRE(fine > 0.0);
    // With the dt/4 reference the expected ratio is (0.1-0.0125)/(0.05-0.0125) = 2.33.
    CHECK(coarse / fine == doctest::Approx(7.0 / 3.0).epsilon(0.1));
}

TEST_CASE("integrate reports the failing step on a non-finite state") {
    GameParams p = GameParams::defaults(2);
    p.learning_rate = 1e308;
    const std::vector<double> q{1.0, 1.0};
    try {
        integrate(PopulationState({0.4, 0.6}), p, q, 1e10, 5);
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}

TEST_CASE("lyapunov value and derivative") {
    CHECK(lyapunov_value(PopulationState::uniform(4)) == doctest::Approx(0.25));
    GameParams flat = GameParams::defaults(3);
    flat.rewards = {700.0, 700.0, 700.0};
    CHECK(lyapunov_derivative(PopulationState::uniform(3), flat, default_capacity(3)) == 0.0);

    // Centred difference of G along the flow.
    const auto p = three_region();
    const std::vector<double> q{1.0, 2.0, 3.0};
    Rng rng(22);
    for (int t = 0; t < 50; ++t) {
        const auto x = random_state(rng, 3);
        const auto dx = replicator_rhs(x, p, q);
        const double h = 1e-3;
        std::vector<double> fwd(3), bwd(3);
        for (int b = 0; b < 3; ++b) {
            fwd[b] = x[b] + h * dx[b];
            bwd[b] = x[b] - h * dx[b];
        }
        auto g = [](const std::vector<double>& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]; };
        const double fd = (g(fwd) - g(bwd)) / (2.0 * h);
        CHECK(std::fabs(lyapunov_derivative(x, p, q) - fd) < 1e-6);
    }
}

TEST_CASE("lipschitz probe: zero rate, linear scaling, seed stability") {
    const auto q = default_capacity(3);
    GameParams p = GameParams::defaults(3);
    Rng a(1);
    p.learning_rate = 0.0;
    CHECK(lipschitz_probe(p, q, 100, a) == 0.0);

    p.learning_rate = 5e-5;
    Rng r1(3), r2(3);
    const double base = lipschitz_probe(p, q, 200, r1);
    GameParams scaled = p;
    scaled.learning_rate = 1e-4;
    CHECK(lipschitz_probe(scaled, q, 200, r2) == doctest::Approx(2.0 * base).epsilon(1e-6));

    std::vector<double> bounds;
    for (std::uint64_t seed : {10u, 20u, 30u, 40u}) {
        Rng r(seed);
        bounds.push_back(lipschitz_probe(p, q, 1000, r));
        CHECK(std::isfinite(bounds.back()));
    }
    for (double b : bounds) CHECK(std::fabs(b - bounds.front()) <= 0.1 * bounds.front());
    CHECK_THROWS_AS(lipschitz_probe(p, q, 1, a), std::invalid_argument);
}

TEST_CASE("uniqueness probe: determinism and bounded sensitivity") {
    const auto p = GameParams::defaults(3);
    const auto q = default_capacity(3);
    const auto x0 = PopulationState::normalized(std::vector<double>{0.18, 0.32, 0.50});
    const auto a = integrate(x0, p, q, 0.01, 1000);
    const auto b = integrate(x0, p, q, 0.01, 1000);
    CHECK(a.states.back() == b.states.back());

    const auto x1 = PopulationState::normalized(std::vector<double>{0.18 + 1e-8, 0.32 - 1e-8, 0.50});
    const auto c = integrate(x1, p, q, 0.01, 1000);
    Rng rng(4);
    // Per-entry bound times dimension gives an infinity-norm Lipschitz constant.
    const double lip = 3.0 * lipschitz_probe(p, q, 1000, rng);
    for (std::size_t i = 0; i < a.size(); ++i) {
        double gap = 0.0;
        for (std::size_t k = 0; k < 3; ++k) gap = std::max(gap, std::fabs(a.states[i][k] - c.states[i][k]));
        CHECK(gap <= 10.0 * std::exp(lip * a.times[i]) * 1e-8);
    }
}

TEST_CASE("tangency on random states") {
    const auto p = three_region();
    const std::vector<double> q{1.0, 2.0, 3.0};
    Rng rng(23);
    for (int t = 0; t < 10000; ++t) {
        const auto dx = replicator_rhs(random_state(rng, 3), p, q);
        CHECK(std::fabs(dx[0] + dx[1] + dx[2]) < 1e-12);
    }
}
