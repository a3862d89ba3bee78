#pragma once
// Simulation configuration and its JSON key schema.
//
// Every key is optional; omitted keys take the defaults below. Unknown keys
// at any level are rejected. An empty (or whitespace-only) file is the
// all-defaults configuration.
//
//   n_servers          int    10          edge servers (recorded)
//   n_regions          int    3           areas / base stations, in [2, 3]
//   n_users            int    100         in [50, 300]
//   congestion_coeff   number 10          mobility multiplier in crowded areas
//   reward_range       [lo, hi] [600, 900] per-area posted rewards, spread evenly
//   momentum           number 0.9         recorded, in [0, 0.9]
//   rounds             int    50
//   seed               int    1
//   p_move             number 0.01        exogenous move probability per user-round
//   rewards_enabled    bool   true        false = zero-reward ablation
//   data_volume_range  [lo, hi] [200, 800] samples per user
//   channel   { beta_mean, p_max, sigma_w2, block_length, privacy_enabled,
//               sigma_p2, compression ("none"|"top-fraction"), keep_fraction,
//               capacity_ref, gradient_dim, bits_per_coordinate, perturb_first }
//   evogame   { learning_rate, unit_cost, dt, window_steps, cost_model
//               ("capacity"|"transmission-time"), task_bits, eq_tol }
//   migration { pop_size, t_max, eta_c, eta_m, p_c, p_m (null = 1/T),
//               selection ("crowding"|"whole-front"), required_capacity,
//               queue_ttl, early_exit_discount }
//   auction   { k_min, t_g, eta, greedy ("ratio"|"price"),
//               payment ("threshold"|"paper-literal"), reserve_ratio, t_cmp,
//               t_max, cost_floor, cost_per_overhead, price_noise }
//   accuracy  { a_max, kappa, lambda }

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "fedcross/auction.hpp"
#include "fedcross/channel.hpp"
#include "fedcross/evogame.hpp"
#include "fedcross/migration.hpp"

namespace fedcross {

struct ChannelConfig {
    channel::ChannelParams params{};
    channel::PrivacySpec privacy{};
    channel::CompressionSpec compression{channel::CompressionMode::top_fraction, 1.0};
    double capacity_ref = 4.0;  // Q at which a user uploads its full gradient
    std::size_t gradient_dim = 256;
    double bits_per_coordinate = 64.0;  // value + index
    bool perturb_first = true;          // noise before compression
};

struct EvogameConfig {
    double learning_rate = 5e-5;
    double unit_cost = 20.0;
    double dt = 0.01;
    std::size_t window_steps = 100;
    evogame::CostModel cost_model = evogame::CostModel::capacity;
    double task_bits = 1.0;
    double eq_tol = 1e-4;
};

struct MigrationConfig {
    migration::GaParams ga{};
    double required_capacity = 1.0;  // bits/s/Hz for an average-volume task
    std::uint64_t queue_ttl = 3;     // rounds a task may wait before expiring
    double early_exit_discount = 0.5;
};

struct AuctionSimConfig {
    auction::AuctionConfig rules{};
    double t_cmp = 1.0;
    double t_max = 1.5;
    double cost_floor = 50.0;
    double cost_per_overhead = 0.5;
    double price_noise = 10.0;
};

struct AccuracyConfig {
    double a_max = 0.99;
    double kappa = 1.6e-6;
    double lambda = 0.5;
};

struct SimConfig {
    std::size_t n_servers = 10;
    std::size_t n_regions = 3;
    std::size_t n_users = 100;
    double congestion_coeff = 10.0;
    std::pair<double, double> reward_range{600.0, 900.0};
    double momentum = 0.9;
    std::size_t rounds = 50;
    std::uint64_t seed = 1;
    double p_move = 0.01;
    bool rewards_enabled = true;
    std::pair<double, double> data_volume_range{200.0, 800.0};

    ChannelConfig channel{};
    EvogameConfig evogame{};
    MigrationConfig migration{};
    AuctionSimConfig auction{};
    AccuracyConfig accuracy{};

    // Throws ConfigError(kind = invalid) on any violated invariant.
    void validate() const;

    evogame::GameParams game_params() const;

    friend bool operator==(const SimConfig& a, const SimConfig& b);
};

class ConfigError : public std::runtime_error {
public:
    enum class Kind { missing_file, malformed, invalid };
    ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

nlohmann::json to_json(const SimConfig& cfg);
SimConfig config_from_json(const nlohmann::json& j);
SimConfig parse_config_text(const std::string& text);
SimConfig parse_config(const std::string& path);

}  // namespace fedcross
