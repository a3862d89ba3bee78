#include "fedcross/evogame.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedcross/simd.hpp"

namespace fedcross::evogame {

namespace {

void require_simplex(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("PopulationState: empty");
    double sum = 0.0;
    for (double v : x) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw std::invalid_argument("PopulationState: component outside [0,1]");
        }
        sum += v;
    }
    if (std::fabs(sum - 1.0) > kSimplexTolerance) {
        throw std::invalid_argument("PopulationState: components must sum to 1");
    }
}

double cost_term(const GameParams& params, double q) {
    if (params.cost_model == CostModel::capacity) return params.unit_cost * q;
    if (!(q > 0.0)) throw std::invalid_argument("transmission-time cost needs capacity > 0");
    return params.unit_cost * params.task_bits / q;
}

double weighted_mass(std::span<const double> x, const GameParams& params) {
    double mass = 0.0;
    for (std::size_t b = 0; b < x.size(); ++b) mass += x[b] * params.data_volume[b];
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw std::domain_error("region utility: weighted population mass is zero");
    }
    return mass;
}

void check_shapes(std::size_t regions, const GameParams& params, std::span<const double> q) {
    if (params.n_regions() != regions || q.size() != regions) {
        throw std::invalid_argument("evogame: state, parameters and capacity sizes differ");
    }
}

// Utilities at an arbitrary positive point (off the simplex too); used by
// the Lipschitz probe, which differentiates coordinate-wise.
std::vector<double> raw_utilities(std::span<const double> x, const GameParams& params,
                                  std::span<const double> q) {
    const double mass = weighted_mass(x, params);
    std::vector<double> u(x.size());
    for (std::size_t b = 0; b < x.size(); ++b) {
        u[b] = params.rewards[b] * (x[b] * params.data_volume[b] / mass) - cost_term(params, q[b]);
    }
    return u;
}

std::vector<double> raw_rhs(std::span<const double> x, const GameParams& params,
                            std::span<const double> q) {
    const auto u = raw_utilities(x, params, q);
    double avg = 0.0;
    for (std::size_t b = 0; b < x.size(); ++b) avg += u[b] * x[b];
    std::vector<double> y(x.size());
    for (std::size_t b = 0; b < x.size(); ++b) y[b] = params.learning_rate * x[b] * (u[b] - avg);
    return y;
}

}  // namespace

PopulationState::PopulationState(std::vector<double> x) : x_(std::move(x)) { require_simplex(x_); }

PopulationState PopulationState::normalized(std::span<const double> raw) {
    std::vector<double> x(raw.begin(), raw.end());
    double sum = 0.0;
    for (double& v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("PopulationState: non-finite component");
        v = std::max(v, 0.0);
        sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("PopulationState: no positive mass");
    for (double& v : x) v = std::min(v / sum, 1.0);
    return PopulationState(std::move(x));
}

PopulationState PopulationState::uniform(std::size_t regions) {
    if (regions == 0) throw std::invalid_argument("PopulationState: zero regions");
    return PopulationState(std::vector<double>(regions, 1.0 / static_cast<double>(regions)));
}

PopulationState PopulationState::vertex(std::size_t regions, std::size_t b) {
    if (b >= regions) throw std::invalid_argument("PopulationState: vertex index out of range");
    std::vector<double> x(regions, 0.0);
    x[b] = 1.0;
    return PopulationState(std::move(x));
}

void GameParams::validate() const {
    const std::size_t n = rewards.size();
    if (n < 1 || data_volume.size() != n) {
        throw std::invalid_argument("GameParams: rewards and data_volume must be non-empty and "
                                    "of equal length");
    }
    for (std::size_t b = 0; b < n; ++b) {
        if (!std::isfinite(rewards[b]) || !(data_volume[b] > 0.0)) {
            throw std::invalid_argument("GameParams: rewards must be finite, data_volume > 0");
        }
    }
    if (!(unit_cost >= 0.0)) throw std::invalid_argument("GameParams: unit_cost must be >= 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("GameParams: learning_rate must be finite and >= 0");
    }
    if (cost_model == CostModel::transmission_time && !(task_bits > 0.0)) {
        throw std::invalid_argument("GameParams: task_bits must be > 0");
    }
}

GameParams GameParams::defaults(std::size_t regions) {
    if (regions == 0) throw std::invalid_argument("GameParams: zero regions");
    GameParams p;
    p.rewards.resize(regions);
    for (std::size_t b = 0; b < regions; ++b) {
        const double t = regions == 1 ? 0.0 : static_cast<double>(b) / (regions - 1);
        p.rewards[b] = 600.0 + 300.0 * t;
    }
    p.data_volume.assign(regions, 1.0);
    return p;
}

CapacityVector default_capacity(std::size_t regions) {
    // log2(1 + 0.2 W · 1.0 / 0.02 W) at unit fading.
    return CapacityVector(regions, std::log2(11.0));
}

double region_utility(const PopulationState& x, std::size_t b, const GameParams& params,
                      double q) {
    if (b >= x.size() || params.n_regions() != x.size()) {
        throw std::invalid_argument("region_utility: region index or sizes inconsistent");
    }
    const double mass = weighted_mass(x.values(), params);
    return params.rewards[b] * (x[b] * params.data_volume[b] / mass) - cost_term(params, q);
}

std::vector<double> region_utilities(const PopulationState& x, const GameParams& params,
                                     std::span<const double> q) {
    check_shapes(x.size(), params, q);
    return raw_utilities(x.values(), params, q);
}

double average_utility(const PopulationState& x, const GameParams& params,
                       std::span<const double> q) {
    const auto u = region_utilities(x, params, q);
    double avg = 0.0;
    for (std::size_t b = 0; b < u.size(); ++b) avg += u[b] * x[b];
    return avg;
}

std::vector<double> replicator_rhs(const PopulationState& x, const GameParams& params,
                                   std::span<const double> q) {
    const auto u = region_utilities(x, params, q);
    const std::size_t n = u.size();
    // On the simplex u_b − ū = Σ_k x_k (u_b − u_k). The pairwise form makes
    // equal-utility states and vertices exact zeros.
    std::vector<double> dx(n);
    for (std::size_t b = 0; b < n; ++b) {
        double excess = 0.0;
        for (std::size_t k = 0; k < n; ++k) excess += x[k] * (u[b] - u[k]);
        dx[b] = params.learning_rate * x[b] * excess;
    }
    return dx;
}

Trajectory integrate(const PopulationState& x0, const GameParams& params,
                     std::span<const double> q, double dt, std::size_t steps) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("integrate: dt must be > 0");
    params.validate();
    check_shapes(x0.size(), params, q);

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.derivatives.reserve(steps + 1);

    PopulationState x = x0;
    auto dx = replicator_rhs(x, params, q);
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.derivatives.push_back(dx);

    std::vector<double> next(x.size());
    for (std::size_t step = 1; step <= steps; ++step) {
        bool finite = true;
        for (std::size_t b = 0; b < x.size(); ++b) {
            next[b] = x[b] + dt * dx[b];
            finite = finite && std::isfinite(next[b]);
        }
        if (!finite) {
            throw std::runtime_error("integrate: non-finite state at step " + std::to_string(step));
        }
        x = PopulationState::normalized(next);
        dx = replicator_rhs(x, params, q);
        traj.times.push_back(static_cast<double>(step) * dt);
        traj.states.push_back(x);
        traj.derivatives.push_back(dx);
    }
    return traj;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::fabs(e));
    return m;
}

std::optional<EquilibriumReport> detect_equilibrium(const Trajectory& traj, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("detect_equilibrium: tol must be > 0");
    if (traj.size() == 0) return std::nullopt;
    std::size_t first = traj.size();
    for (std::size_t i = traj.size(); i-- > 0;) {
        if (max_abs(traj.derivatives[i]) < tol) {
            first = i;
        } else {
            break;
        }
    }
    if (first == traj.size()) return std::nullopt;
    return EquilibriumReport{traj.times[first], first, traj.states.back()};
}

double lyapunov_value(const PopulationState& x) { return simd::sum_squares(x.values()); }

double lyapunov_derivative(const PopulationState& x, const GameParams& params,
                           std::span<const double> q) {
    const auto dx = replicator_rhs(x, params, q);
    return 2.0 * simd::dot(x.values(), dx);
}

double lipschitz_probe(const GameParams& params, std::span<const double> q,
                       std::size_t samples, Rng& rng) {
    if (samples < 2) throw std::invalid_argument("lipschitz_probe: need at least 2 samples");
    params.validate();
    const std::size_t n = params.n_regions();
    if (q.size() != n) throw std::invalid_argument("lipschitz_probe: capacity size mismatch");

    constexpr double h = 1e-6;
    // Dirichlet(0.2) puts most samples near the boundary, where the derivative
    // bound of this polynomial field is attained; the floor keeps x ± h inside.
    std::gamma_distribution<double> shape(0.2, 1.0);
    const double floor = 1e-4;
    double bound = 0.0;
    std::vector<double> x(n), plus(n), minus(n);
    for (std::size_t s = 0; s < samples; ++s) {
        double sum = 0.0;
        for (double& v : x) {
            v = shape(rng);
            sum += v;
        }
        if (!(sum > 0.0)) continue;
        for (double& v : x) v = floor / static_cast<double>(n) + (1.0 - floor) * v / sum;
        for (std::size_t k = 0; k < n; ++k) {
            plus = x;
            minus = x;
            plus[k] += h;
            minus[k] -= h;
            const auto yp = raw_rhs(plus, params, q);
            const auto ym = raw_rhs(minus, params, q);
            for (std::size_t b = 0; b < n; ++b) {
                bound = std::max(bound, std::fabs((yp[b] - ym[b]) / (2.0 * h)));
            }
        }
    }
    if (!std::isfinite(bound)) throw std::runtime_error("lipschitz_probe: non-finite estimate");
    return bound;
}

}  // namespace fedcross::evogame
