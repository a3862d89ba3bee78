#pragma once
// Replicator dynamics over region-membership proportions.
//
// Region b pays users the reward R_b split by data share
//   u_b(x) = R_b · x_b·M_b / Σ_k x_k·M_k − ξ·c_b
// where c_b is the channel-capacity cost term (or transmission time under the
// alternative cost model). The population drifts by
//   ẋ_b = Δ · x_b · (u_b − ū),   ū = Σ_b u_b·x_b,
// integrated with fixed-step explicit Euler and projected back onto the
// simplex after every step.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedcross/rng.hpp"

namespace fedcross::evogame {

inline constexpr double kSimplexTolerance = 1e-9;

// Proportions of users per region; always a point of the probability simplex.
class PopulationState {
public:
    PopulationState() = default;
    // Throws std::invalid_argument unless x lies on the simplex.
    explicit PopulationState(std::vector<double> x);

    // Clamps negatives to 0 and rescales to unit sum. Throws when the input
    // has no positive mass or contains non-finite values.
    static PopulationState normalized(std::span<const double> raw);
    static PopulationState uniform(std::size_t regions);
    static PopulationState vertex(std::size_t regions, std::size_t b);

    std::size_t size() const { return x_.size(); }
    double operator[](std::size_t b) const { return x_[b]; }
    std::span<const double> values() const { return x_; }

    friend bool operator==(const PopulationState&, const PopulationState&) = default;

private:
    std::vector<double> x_;
};

enum class CostModel {
    capacity,           // ξ·Q, as written
    transmission_time,  // ξ·task_bits/Q
};

struct GameParams {
    std::vector<double> rewards;      // R_b
    std::vector<double> data_volume;  // M_b, aggregate per region
    double unit_cost = 20.0;          // ξ
    double learning_rate = 5e-5;      // Δ
    CostModel cost_model = CostModel::capacity;
    double task_bits = 1.0;           // only for CostModel::transmission_time

    std::size_t n_regions() const { return rewards.size(); }
    void validate() const;

    // Rewards spread evenly over [600, 900], unit data volume.
    static GameParams defaults(std::size_t regions);
};

// Per-region channel capacity used by the cost term (bits/s/Hz).
using CapacityVector = std::vector<double>;

// Capacity used by the default parameter set for every region.
CapacityVector default_capacity(std::size_t regions);

struct Trajectory {
    std::vector<double> times;
    std::vector<PopulationState> states;
    std::vector<std::vector<double>> derivatives;

    std::size_t size() const { return times.size(); }
};

struct EquilibriumReport {
    double time = 0.0;
    std::size_t index = 0;
    PopulationState state;
};

double region_utility(const PopulationState& x, std::size_t b, const GameParams& params,
                      double q);

std::vector<double> region_utilities(const PopulationState& x, const GameParams& params,
                                     std::span<const double> q);

double average_utility(const PopulationState& x, const GameParams& params,
                       std::span<const double> q);

std::vector<double> replicator_rhs(const PopulationState& x, const GameParams& params,
                                   std::span<const double> q);

// Explicit Euler for `steps` steps of size dt; records the initial sample and
// every step. Throws std::runtime_error naming the step on a non-finite state.
Trajectory integrate(const PopulationState& x0, const GameParams& params,
                     std::span<const double> q, double dt, std::size_t steps);

// First sample from which ‖ẋ‖∞ < tol holds through the end of the trajectory.
std::optional<EquilibriumReport> detect_equilibrium(const Trajectory& traj, double tol);

double lyapunov_value(const PopulationState& x);
double lyapunov_derivative(const PopulationState& x, const GameParams& params,
                           std::span<const double> q);

// Largest |∂ẋ_b/∂x_k| seen over `samples` random interior points, by
// central differences.
double lipschitz_probe(const GameParams& params, std::span<const double> q,
                       std::size_t samples, Rng& rng);

double max_abs(std::span<const double> v);

}  // namespace fedcross::evogame
