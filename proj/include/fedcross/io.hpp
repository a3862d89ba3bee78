#pragma once
// JSON instance files and the CSV / JSON-lines emitters used by the CLI.
//
// Auction instance:
//   {"bids": [{"bs", "schedule", "price", "accuracy", "quality", "t_cmp",
//              "t_max", "true_cost"}],
//    "config": {"k_min", "t_g", "eta", "greedy", "payment", "reserve_ratio"},
//    "capacities": {"<bs>": Q, ...}}
// Migration instance:
//   {"tasks": [{"id", "origin_user", "required_capacity", "data_size",
//               "progress"}],
//    "receivers": [{"id", "capacity"}],
//    "ga": {"pop_size", "t_max", "eta_c", "eta_m", "p_c", "p_m", "selection"}}
// Missing "config"/"ga" members keep the caller's defaults; "true_cost"
// defaults to the price.

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedcross/auction.hpp"
#include "fedcross/evogame.hpp"
#include "fedcross/migration.hpp"
#include "fedcross/sim.hpp"

namespace fedcross::io {

inline constexpr const char* kTrajectorySchema = "trajectory/1";
inline constexpr const char* kMetricsSchema = "metrics/1";
inline constexpr const char* kGenerationSchema = "generations/1";
inline constexpr const char* kPlanSchema = "plan/1";
inline constexpr const char* kOutcomeSchema = "outcome/1";
inline constexpr const char* kManifestSchema = "manifest/1";

// Bad instance content (as opposed to unreadable or unparsable files).
class InstanceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct AuctionInstance {
    std::vector<auction::Bid> bids;
    auction::AuctionConfig config;
    auction::CapacityMap capacities;
};

struct MigrationInstance {
    std::vector<migration::Task> tasks;
    std::vector<migration::Receiver> receivers;
    migration::GaParams ga;
};

AuctionInstance auction_instance_from_json(const nlohmann::json& j,
                                           const auction::AuctionConfig& defaults = {});
nlohmann::json to_json(const AuctionInstance& inst);
nlohmann::json to_json(const auction::AuctionOutcome& outcome);

MigrationInstance migration_instance_from_json(const nlohmann::json& j,
                                               const migration::GaParams& defaults = {});
nlohmann::json to_json(const MigrationInstance& inst);
nlohmann::json to_json(const migration::AssignmentPlan& plan);

// Shortest text that reads back to the same double.
std::string format_double(double v);

void write_trajectory_csv(std::ostream& out, const evogame::Trajectory& traj);
void write_trajectory_jsonl(std::ostream& out, const evogame::Trajectory& traj);
void write_generation_csv(std::ostream& out, const std::vector<migration::GenerationLog>& log);
void write_metrics_jsonl(std::ostream& out, const std::vector<sim::RoundMetrics>& metrics);
void write_metrics_csv(std::ostream& out, const std::vector<sim::RoundMetrics>& metrics);

}  // namespace fedcross::io
