#pragma once
// Round-based orchestration of the four workflow stages: region formation by
// replicator dynamics, mobility-triggered task migration, the procurement
// auction between base stations and the cloud, and reward distribution.
// There is one base station per region.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fedcross/auction.hpp"
#include "fedcross/channel.hpp"
#include "fedcross/config.hpp"
#include "fedcross/evogame.hpp"
#include "fedcross/migration.hpp"
#include "fedcross/rng.hpp"

namespace fedcross::sim {

using migration::UserId;

struct UserState {
    UserId id = 0;
    std::size_t region = 0;  // base station the user is attached to
    double data_volume = 0.0;  // samples
    channel::ChannelState channel{};
    double capacity = 0.0;     // bits/s/Hz this round
    std::optional<migration::Task> active_task;
    double cumulative_reward = 0.0;
};

struct StationState {
    std::size_t id = 0;
    double accuracy = 0.0;
    std::uint64_t rounds_trained = 0;
};

struct SimState {
    std::uint64_t round = 0;
    std::vector<UserState> users;
    std::vector<StationState> stations;
    std::vector<migration::OnlineQueue> queues;  // per region
    std::uint64_t next_task_id = 1;
};

struct RoundMetrics {
    std::uint64_t round = 0;
    std::vector<double> region_proportions;
    std::size_t migrations_triggered = 0;
    std::size_t migrations_reassigned = 0;
    double comm_overhead = 0.0;
    std::vector<double> regional_accuracy;
    double total_payment = 0.0;
    double rewards_distributed = 0.0;
    double participation_rate = 0.0;
    bool auction_unsatisfiable = false;
    std::vector<std::size_t> winners;
    std::size_t tasks_carried_in = 0;
    std::size_t tasks_new = 0;
    std::size_t tasks_expired = 0;
    std::size_t tasks_queued_out = 0;
    std::size_t rehomed_users = 0;
};

struct TriggerResult {
    std::vector<std::size_t> departing;         // indices into users, ascending
    std::vector<std::size_t> destinations;      // region per departing user
    std::vector<migration::Task> queued;        // one per departing user
};

// Users in regions holding more than the mean load move exogenously with
// probability min(1, p_move · congestion_coeff); others with p_move. A user
// also leaves whenever its net utility in the current region is negative.
// Draw order: one uniform per user (ascending index), then for each departing
// user one progress uniform and one destination index.
TriggerResult trigger_migrations(std::span<const UserState> users,
                                 const evogame::PopulationState& proportions,
                                 const evogame::GameParams& params, double p_move,
                                 double congestion_coeff, double required_capacity,
                                 std::uint64_t round, std::uint64_t first_task_id, Rng& rng);

// A_max·(1 − exp(−κ·D_eff·r))·(1 − λ·interruption_rate).
double synthetic_accuracy(double effective_data, std::uint64_t rounds,
                          double interruption_rate, const AccuracyConfig& cfg);

double participation_rate(std::size_t uploading, std::size_t total);

SimState initial_state(const SimConfig& cfg);

// Current head-count proportions per region.
std::vector<double> region_shares(std::span<const UserState> users, std::size_t regions);

RoundMetrics run_round(SimState& state, const SimConfig& cfg);

struct SimResult {
    SimState final_state;
    std::vector<RoundMetrics> metrics;
};

SimResult run_simulation(const SimConfig& cfg);

nlohmann::json to_json(const RoundMetrics& m);

}  // namespace fedcross::sim
