#include "fedcross/auction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace fedcross::auction {

void Bid::validate() const {
    if (!(price > 0.0) || !std::isfinite(price)) {
        throw std::invalid_argument("Bid: price must be finite and > 0");
    }
    if (!(accuracy >= 0.0 && accuracy < 1.0)) {
        throw std::invalid_argument("Bid: accuracy must lie in [0, 1)");
    }
    if (!(quality > 0.0) || !std::isfinite(quality)) {
        throw std::invalid_argument("Bid: quality must be finite and > 0");
    }
    if (!(t_cmp > 0.0) || !(t_max > 0.0)) throw std::invalid_argument("Bid: times must be > 0");
}

void AuctionConfig::validate() const {
    if (k_min < 1) throw std::invalid_argument("AuctionConfig: k_min must be >= 1");
    if (t_g < 1) throw std::invalid_argument("AuctionConfig: t_g must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("AuctionConfig: eta must be > 0");
    if (!(reserve_ratio >= 1.0)) throw std::invalid_argument("AuctionConfig: reserve_ratio must be >= 1");
}

UnsatisfiableAuction::UnsatisfiableAuction(std::size_t needed, std::size_t available)
    : std::runtime_error("auction unsatisfiable: need " + std::to_string(needed) +
                         " base stations with feasible bids, have " + std::to_string(available) +
                         " (short by " + std::to_string(needed - available) + ")"),
      needed_(needed),
      available_(available) {}

double AuctionOutcome::payment_of(BsId bs) const {
    for (const WinnerPayment& p : payments) {
        if (p.bs_id == bs) return p.payment;
    }
    return 0.0;
}

bool AuctionOutcome::is_winner(BsId bs) const {
    return std::any_of(winners.begin(), winners.end(), [&](const Bid& b) { return b.bs_id == bs; });
}

bool feasible(const Bid& bid, const AuctionConfig& cfg, double q) {
    if (bid.accuracy == 1.0) throw std::domain_error("feasible: accuracy of 1 makes the iteration bound infinite");
    const double iterations_needed = 1.0 / (1.0 - bid.accuracy);
    const double time_ratio = (bid.t_cmp + q / cfg.eta) / bid.t_max;
    return static_cast<double>(cfg.t_g) >= iterations_needed && time_ratio >= 1.0;
}

double capacity_for(const CapacityMap& capacities, BsId bs) {
    const auto it = capacities.find(bs);
    if (it == capacities.end()) {
        throw std::invalid_argument("no channel capacity given for base station " + std::to_string(bs));
    }
    return it->second;
}

namespace {

auto ratio_key(const Bid& b) { return std::make_tuple(b.ratio(), b.price, b.bs_id, b.schedule_id); }
auto price_key(const Bid& b) { return std::make_tuple(b.price, b.bs_id, b.schedule_id); }

bool better(const Bid& a, const Bid& b, GreedyRule rule) {
    return rule == GreedyRule::ratio ? ratio_key(a) < ratio_key(b) : price_key(a) < price_key(b);
}

std::vector<Bid> feasible_bids(std::span<const Bid> bids, const AuctionConfig& cfg,
                               const CapacityMap& capacities) {
    std::vector<Bid> out;
    out.reserve(bids.size());
    for (const Bid& b : bids) {
        b.validate();
        if (feasible(b, cfg, capacity_for(capacities, b.bs_id))) out.push_back(b);
    }
    return out;
}

std::vector<Bid> select_from(std::vector<Bid> pool, const AuctionConfig& cfg) {
    std::set<BsId> distinct;
    for (const Bid& b : pool) distinct.insert(b.bs_id);
    if (distinct.size() < cfg.k_min) throw UnsatisfiableAuction(cfg.k_min, distinct.size());

    std::vector<Bid> winners;
    winners.reserve(cfg.k_min);
    while (winners.size() < cfg.k_min) {
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (best == pool.size() || better(pool[i], pool[best], cfg.greedy)) best = i;
        }
        const Bid chosen = pool[best];
        winners.push_back(chosen);
        // One schedule per base station: drop the rest of its bids.
        std::erase_if(pool, [&](const Bid& b) { return b.bs_id == chosen.bs_id; });
    }
    return winners;
}

}  // namespace

std::vector<Bid> greedy_select(std::span<const Bid> bids, const AuctionConfig& cfg,
                               const CapacityMap& capacities) {
    cfg.validate();
    return select_from(feasible_bids(bids, cfg, capacities), cfg);
}

Bid critical_bid(std::span<const Bid> bids, std::span<const Bid> winners,
                 const AuctionConfig& cfg, const CapacityMap& capacities) {
    std::set<BsId> won;
    for (const Bid& w : winners) won.insert(w.bs_id);
    std::optional<Bid> best;
    for (const Bid& b : feasible_bids(bids, cfg, capacities)) {
        if (won.contains(b.bs_id)) continue;
        if (!best || ratio_key(b) < ratio_key(*best)) best = b;
    }
    if (!best) throw NoCriticalBid();
    return *best;
}

double payment(const Bid& winner, const Bid& critical, PaymentRule rule) {
    const double critical_ratio = critical.price / critical.quality;
    if (rule == PaymentRule::paper_literal) {
        return winner.quality - critical_ratio * winner.quality;
    }
    const double threshold = critical_ratio * winner.quality;
    // When the winner's ratio does not exceed the critical ratio the threshold
    // is mathematically >= its price; rounding can undershoot by an ulp.
    if (winner.ratio() <= critical_ratio) return std::max(threshold, winner.price);
    return threshold;
}

AuctionOutcome run_auction(std::span<const Bid> bids, const AuctionConfig& cfg,
                           const CapacityMap& capacities) {
    cfg.validate();
    const std::vector<Bid> pool = feasible_bids(bids, cfg, capacities);
    AuctionOutcome out;
    out.winners = select_from(pool, cfg);

    for (const Bid& b : bids) out.selection[b.bs_id] = 0;
    for (const Bid& w : out.winners) out.selection[w.bs_id] = 1;

    std::optional<Bid> critical;
    try {
        critical = critical_bid(bids, out.winners, cfg, capacities);
    } catch (const NoCriticalBid&) {
        critical.reset();
    }
    out.critical_bid = critical;

    for (const Bid& w : out.winners) {
        WinnerPayment p{w.bs_id, w.schedule_id, 0.0, !critical.has_value()};
        p.payment = critical ? payment(w, *critical, cfg.payment) : cfg.reserve_ratio * w.price;
        out.total_payment += p.payment;
        out.payments.push_back(p);
    }
    return out;
}

double bidder_utility(const AuctionOutcome& outcome, std::span<const Bid> bids, BsId bs) {
    double utility = 0.0;
    for (std::size_t i = 0; i < outcome.winners.size(); ++i) {
        const Bid& w = outcome.winners[i];
        if (w.bs_id != bs) continue;
        double cost = w.true_cost;
        for (const Bid& b : bids) {
            if (b.bs_id == w.bs_id && b.schedule_id == w.schedule_id) cost = b.true_cost;
        }
        utility += outcome.payments[i].payment - cost;
    }
    return utility;
}

IrReport verify_ir(const AuctionOutcome& outcome, std::span<const Bid> bids) {
    IrReport report;
    for (const Bid& b : bids) report.utilities[b.bs_id] = 0.0;
    for (const Bid& w : outcome.winners) {
        const double u = bidder_utility(outcome, bids, w.bs_id);
        report.utilities[w.bs_id] = u;
        if (u < 0.0) report.violations.push_back(w.bs_id);
    }
    return report;
}

IcReport verify_ic(std::span<const Bid> bids, const AuctionConfig& cfg,
                   const CapacityMap& capacities, std::size_t grid_points) {
    if (grid_points < 50) throw std::invalid_argument("verify_ic: grid needs at least 50 points");
    IcReport report;
    const AuctionOutcome truthful = run_auction(bids, cfg, capacities);
    std::vector<Bid> trial(bids.begin(), bids.end());
    for (std::size_t i = 0; i < bids.size(); ++i) {
        const BsId bs = bids[i].bs_id;
        const double v = bids[i].true_cost;
        const double base = bidder_utility(truthful, bids, bs);
        for (std::size_t g = 0; g < grid_points; ++g) {
            const double t = static_cast<double>(g) / static_cast<double>(grid_points - 1);
            const double misreport = v * (0.1 + 2.9 * t);
            trial[i].price = misreport;
            const AuctionOutcome outcome = run_auction(trial, cfg, capacities);
            const double gain = bidder_utility(outcome, bids, bs) - base;
            ++report.reruns;
            if (gain > report.max_gain) {
                report.max_gain = gain;
                report.worst_bidder = bs;
                report.worst_misreport = misreport;
            }
        }
        trial[i].price = bids[i].price;
    }
    return report;
}

std::optional<std::string> check_constraints(const AuctionOutcome& outcome, std::span<const Bid> bids,
                                             const AuctionConfig& cfg,
                                             const CapacityMap& capacities) {
    if (outcome.winners.size() < cfg.k_min) return "fewer winners than k_min";
    if (outcome.payments.size() != outcome.winners.size()) return "payments not aligned with winners";
    std::set<BsId> seen;
    for (const Bid& w : outcome.winners) {
        if (!seen.insert(w.bs_id).second) return "base station " + std::to_string(w.bs_id) + " selected twice";
        if (!feasible(w, cfg, capacity_for(capacities, w.bs_id))) {
            return "winner " + std::to_string(w.bs_id) + " violates a feasibility constraint";
        }
    }
    for (const Bid& b : bids) {
        const auto it = outcome.selection.find(b.bs_id);
        if (it == outcome.selection.end()) return "missing selection indicator";
        if ((it->second == 1) != seen.contains(b.bs_id)) return "selection indicator inconsistent";
    }
    return std::nullopt;
}

}  // namespace fedcross::auction
