#pragma once
// Greedy procurement auction: base stations sell model updates to the cloud.
//
// Winners are chosen greedily by cost per unit quality (one schedule per base
// station, at least k_min base stations). Each winner is paid the threshold
// price (critical ratio × its own quality), the highest price at which it
// would still have been selected.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedcross::auction {

using BsId = std::uint64_t;

struct Bid {
    BsId bs_id = 0;
    std::uint64_t schedule_id = 0;
    double price = 0.0;      // claimed cost
    double accuracy = 0.0;   // in [0, 1)
    double quality = 0.0;    // utility increment, > 0
    double t_cmp = 0.0;      // s
    double t_max = 0.0;      // s
    double true_cost = 0.0;  // private valuation, verifiers only

    void validate() const;
    double ratio() const { return price / quality; }
};

enum class GreedyRule { ratio, price };
enum class PaymentRule { threshold, paper_literal };

struct AuctionConfig {
    std::size_t k_min = 1;
    std::uint64_t t_g = 20;
    double eta = 1.0;
    GreedyRule greedy = GreedyRule::ratio;
    PaymentRule payment = PaymentRule::threshold;
    double reserve_ratio = 1.5;

    void validate() const;
};

// Per-base-station channel capacity Q used by the time constraint.
using CapacityMap = std::map<BsId, double>;

struct WinnerPayment {
    BsId bs_id = 0;
    std::uint64_t schedule_id = 0;
    double payment = 0.0;
    bool reserve = false;  // paid by the reserve ratio (no critical bid)
};

struct AuctionOutcome {
    std::vector<Bid> winners;              // selection order
    std::map<BsId, int> selection;         // y_bs for every bidding base station
    std::vector<WinnerPayment> payments;   // aligned with winners
    double total_payment = 0.0;
    std::optional<Bid> critical_bid;

    double payment_of(BsId bs) const;
    bool is_winner(BsId bs) const;
};

class UnsatisfiableAuction : public std::runtime_error {
public:
    UnsatisfiableAuction(std::size_t needed, std::size_t available);
    std::size_t needed() const { return needed_; }
    std::size_t available() const { return available_; }

private:
    std::size_t needed_;
    std::size_t available_;
};

class NoCriticalBid : public std::runtime_error {
public:
    NoCriticalBid() : std::runtime_error("no critical bid: every feasible bid belongs to a winner") {}
};

// Iteration-budget and time constraints. Throws std::domain_error when
// accuracy == 1.
bool feasible(const Bid& bid, const AuctionConfig& cfg, double q);

double capacity_for(const CapacityMap& capacities, BsId bs);

std::vector<Bid> greedy_select(std::span<const Bid> bids, const AuctionConfig& cfg,
                               const CapacityMap& capacities);

// Cheapest (by ratio) feasible bid from a base station that did not win.
Bid critical_bid(std::span<const Bid> bids, std::span<const Bid> winners,
                 const AuctionConfig& cfg, const CapacityMap& capacities);

double payment(const Bid& winner, const Bid& critical, PaymentRule rule = PaymentRule::threshold);

AuctionOutcome run_auction(std::span<const Bid> bids, const AuctionConfig& cfg,
                           const CapacityMap& capacities);

struct IrReport {
    std::map<BsId, double> utilities;  // winners and losers
    std::vector<BsId> violations;      // winners with negative utility
    bool ok() const { return violations.empty(); }
};

// Utility payment − true_cost per winner; losers get 0.
IrReport verify_ir(const AuctionOutcome& outcome, std::span<const Bid> bids);

struct IcReport {
    double max_gain = 0.0;  // best misreport utility minus truthful utility
    BsId worst_bidder = 0;
    double worst_misreport = 0.0;
    std::size_t reruns = 0;
    bool ok(double tolerance = 1e-9) const { return max_gain <= tolerance; }
};

// Bids are assumed truthful (price == true_cost). For every bid, re-runs the
// auction with that bid's price swept over [0.1·v, 3·v] (`grid_points` values,
// >= 50) and records the largest utility gain over truthful bidding.
IcReport verify_ic(std::span<const Bid> bids, const AuctionConfig& cfg,
                   const CapacityMap& capacities, std::size_t grid_points = 50);

// Utility of a base station under an outcome, valued at its true costs.
double bidder_utility(const AuctionOutcome& outcome, std::span<const Bid> bids, BsId bs);

// Checks the allocation constraints on an outcome: at least k_min winners,
// one schedule per base station, every winner feasible, y consistent with
// the winner set. Returns a description of the first violation.
std::optional<std::string> check_constraints(const AuctionOutcome& outcome, std::span<const Bid> bids,
                                             const AuctionConfig& cfg,
                                             const CapacityMap& capacities);

}  // namespace fedcross::auction
