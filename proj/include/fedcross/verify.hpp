#pragma once
// Self-checks run by `fedcross_cli verify`: mechanism properties of the
// auction (IR, IC, constraints) and oracle comparisons for the other modules.

#include <cstdint>
#include <string>
#include <vector>

#include "fedcross/config.hpp"
#include "fedcross/io.hpp"
#include "fedcross/rng.hpp"

namespace fedcross::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// One bid per base station, every bid feasible. Prices in [10, 100],
// accuracy (= quality) in [0.7, 0.95], true cost equal to the price.
io::AuctionInstance random_auction_instance(Rng& rng, std::size_t n_bs, std::size_t k_min);

// Tasks with data size in [1, 10] and required capacity in [0.5, 3];
// receivers with capacity in [0.5, 6].
io::MigrationInstance random_migration_instance(Rng& rng, std::size_t n_tasks, std::size_t n_receivers);

// Independent checks, run concurrently when `parallel` is set. Auction checks
// use the payment and greedy rules from `cfg`.
std::vector<CheckResult> run_all(const SimConfig& cfg, std::uint64_t seed, bool parallel = true);

}  // namespace fedcross::verify
