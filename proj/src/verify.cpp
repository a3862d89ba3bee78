#include "fedcross/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <sstream>

#include "fedcross/channel.hpp"
#include "fedcross/evogame.hpp"
#include "fedcross/migration.hpp"

namespace fedcross::verify {

namespace {

using Check = std::function<CheckResult()>;

CheckResult result(std::string name, bool ok, std::string detail) {
    return {std::move(name), ok, std::move(detail)};
}

CheckResult capacity_anchors() {
    channel::ChannelParams params;
    params.sigma_w2 = 1.0;
    const double snr[] = {0.0, 1.0, 3.0};
    const double want[] = {0.0, 1.0, 2.0};
    for (int i = 0; i < 3; ++i) {
        const double q = channel::capacity({1.0, 1.0, snr[i]}, params);
        if (q != want[i]) {
            return result("capacity-anchors", false, "SNR " + io::format_double(snr[i]) + " gave " + io::format_double(q));
        }
    }
    return result("capacity-anchors", true, "SNR 0,1,3 -> 0,1,2");
}

std::vector<double> random_simplex(Rng& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> x(n);
    for (double& v : x) v = e(rng);
    return x;
}

CheckResult replicator_tangency(const SimConfig& cfg, std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x71});
    const auto params = cfg.game_params();
    const auto q = evogame::default_capacity(cfg.n_regions);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = evogame::PopulationState::normalized(random_simplex(rng, cfg.n_regions));
        const auto dx = evogame::replicator_rhs(x, params, q);
        double s = 0.0;
        for (double d : dx) s += d;
        worst = std::max(worst, std::fabs(s));
    }
    return result("replicator-tangency", worst < 1e-12, "max |sum dx| = " + io::format_double(worst));
}

CheckResult evogame_convergence(const SimConfig& cfg) {
    const std::vector<double> start{0.18, 0.32, 0.50};
    const auto x0 = evogame::PopulationState::normalized(std::span(start).first(cfg.n_regions));
    const auto params = cfg.game_params();
    const auto q = evogame::default_capacity(cfg.n_regions);
    const auto steps = static_cast<std::size_t>(std::ceil(500.0 / cfg.evogame.dt));
    const auto traj = evogame::integrate(x0, params, q, cfg.evogame.dt, steps);
    const auto eq = evogame::detect_equilibrium(traj, cfg.evogame.eq_tol);
    if (!eq) return result("evogame-convergence", false, "no equilibrium within t = 500");
    const double dg = evogame::lyapunov_derivative(eq->state, params, q);
    std::ostringstream msg;
    msg << "equilibrium at t = " << io::format_double(eq->time) << ", dG/dt = " << io::format_double(dg);
    return result("evogame-convergence", std::fabs(dg) < 1e-3, msg.str());
}

// Pairwise definition of Pareto ranks, for comparison with the fast sort.
std::vector<std::size_t> brute_force_ranks(const std::vector<migration::Objectives>& pts) {
    std::vector<std::size_t> rank(pts.size(), 0);
    std::size_t done = 0;
    for (std::size_t level = 1; done < pts.size(); ++level) {
        std::vector<std::size_t> current;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (rank[i] != 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
                if (j == i || rank[j] != 0) continue;  // earlier fronts are removed
                bool no_worse = true, better = false;
                for (std::size_t m = 0; m < pts[i].size(); ++m) {
                    if (pts[j][m] > pts[i][m]) no_worse = false;
                    if (pts[j][m] < pts[i][m]) better = true;
                }
                dominated = no_worse && better;
            }
            if (!dominated) current.push_back(i);
        }
        for (std::size_t i : current) rank[i] = level;
        done += current.size();
    }
    return rank;
}

CheckResult sort_oracle(std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x72});
    std::uniform_int_distribution<int> size(1, 100);
    std::uniform_int_distribution<int> grid(0, 9);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<migration::Objectives> pts(static_cast<std::size_t>(size(rng)));
        for (auto& p : pts) p = {static_cast<double>(grid(rng)), static_cast<double>(grid(rng))};
        const auto fronts = migration::nondominated_fronts(pts);
        const auto want = brute_force_ranks(pts);
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            for (std::size_t i : fronts[f]) {
                if (want[i] != f + 1) {
                    return result("nondominated-sort-oracle", false, "trial " + std::to_string(trial) + " disagrees");
                }
            }
        }
    }
    return result("nondominated-sort-oracle", true, "100 random populations match");
}

CheckResult auction_hand_instance() {
    auto bid = [](auction::BsId bs, double price) {
        return auction::Bid{bs, 0, price, 0.9, 1.0, 1.0, 1.0, price};
    };
    const std::vector<auction::Bid> bids{bid(0, 3.0), bid(1, 5.0), bid(2, 7.0)};
    auction::AuctionConfig cfg;
    cfg.k_min = 2;
    const auction::CapacityMap caps{{0, 1.0}, {1, 1.0}, {2, 1.0}};
    const auto out = auction::run_auction(bids, cfg, caps);
    const bool ok = out.winners.size() == 2 && out.winners[0].bs_id == 0 && out.winners[1].bs_id == 1 &&
                    out.payment_of(0) == 7.0 && out.payment_of(1) == 7.0 && out.total_payment == 14.0;
    return result("auction-three-bidder", ok, "total payment " + io::format_double(out.total_payment));
}

std::size_t pick_k(Rng& rng, std::size_t n_bs) {
    std::uniform_int_distribution<std::size_t> k(1, std::min<std::size_t>(3, n_bs - 1));
    return k(rng);
}

CheckResult auction_properties(const SimConfig& cfg, std::uint64_t seed, bool ic) {
    const char* name = ic ? "auction-ic" : "auction-ir-constraints";
    Rng rng = make_rng(seed, {ic ? 0x74u : 0x73u});
    std::uniform_int_distribution<std::size_t> n_bs(3, 10);
    const int trials = ic ? 30 : 200;
    double worst_gain = 0.0;
    for (int t = 0; t < trials; ++t) {
        const std::size_t n = n_bs(rng);
        auto inst = random_auction_instance(rng, n, pick_k(rng, n));
        inst.config.greedy = cfg.auction.rules.greedy;
        inst.config.payment = cfg.auction.rules.payment;
        if (ic) {
            const auto rep = auction::verify_ic(inst.bids, inst.config, inst.capacities, 50);
            worst_gain = std::max(worst_gain, rep.max_gain);
            continue;
        }
        const auto out = auction::run_auction(inst.bids, inst.config, inst.capacities);
        if (const auto err = auction::check_constraints(out, inst.bids, inst.config, inst.capacities)) {
            return result(name, false, "instance " + std::to_string(t) + ": " + *err);
        }
        const auto ir = auction::verify_ir(out, inst.bids);
        if (!ir.violations.empty()) {
            return result(name, false, "instance " + std::to_string(t) + ": negative utility for base station " +
                                           std::to_string(ir.violations.front()));
        }
    }
    if (ic) return result(name, worst_gain <= 1e-9, "max misreport gain " + io::format_double(worst_gain));
    return result(name, true, std::to_string(trials) + " instances");
}

CheckResult decode_feasibility(std::uint64_t seed) {
    Rng rng = make_rng(seed, {0x75});
    std::uniform_real_distribution<double> gene(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const auto inst = random_migration_instance(rng, 10, 20);
        std::vector<double> genome(inst.tasks.size());
        for (double& g : genome) g = gene(rng);
        const auto plan = migration::decode(genome, inst.tasks, inst.receivers);
        std::map<migration::UserId, double> load;
        for (std::size_t i = 0; i < plan.mapping.size(); ++i) {
            if (plan.mapping[i].receiver) load[*plan.mapping[i].receiver] += inst.tasks[i].required_capacity;
        }
        for (const auto& r : inst.receivers) {
            if (load[r.id] > r.capacity) {
                return result("migration-decode-capacity", false, "receiver " + std::to_string(r.id) + " overloaded");
            }
        }
    }
    return result("migration-decode-capacity", true, "100 decoded plans within capacity");
}

}  // namespace

io::AuctionInstance random_auction_instance(Rng& rng, std::size_t n_bs, std::size_t k_min) {
    std::uniform_real_distribution<double> price(10.0, 100.0), accuracy(0.7, 0.95), t_cmp(0.5, 1.0),
        t_max(1.0, 2.0), slack(0.0, 2.0);
    io::AuctionInstance inst;
    inst.config.k_min = k_min;
    inst.config.t_g = 50;
    inst.config.eta = 1.0;
    for (std::size_t b = 0; b < n_bs; ++b) {
        auction::Bid bid;
        bid.bs_id = b;
        bid.price = price(rng);
        bid.accuracy = accuracy(rng);
        bid.quality = bid.accuracy;
        bid.t_cmp = t_cmp(rng);
        bid.t_max = t_max(rng);
        bid.true_cost = bid.price;
        inst.capacities[b] = bid.t_max + slack(rng);
        inst.bids.push_back(bid);
    }
    return inst;
}

io::MigrationInstance random_migration_instance(Rng& rng, std::size_t n_tasks, std::size_t n_receivers) {
    std::uniform_real_distribution<double> size(1.0, 10.0), need(0.5, 3.0), cap(0.5, 6.0), progress(0.0, 0.9);
    io::MigrationInstance inst;
    for (std::size_t i = 0; i < n_tasks; ++i) {
        migration::Task t;
        t.id = i + 1;
        t.origin_user = 1000 + i;
        t.required_capacity = need(rng);
        t.data_size = size(rng);
        t.progress = progress(rng);
        inst.tasks.push_back(t);
    }
    for (std::size_t r = 0; r < n_receivers; ++r) inst.receivers.push_back({r, cap(rng)});
    return inst;
}

std::vector<CheckResult> run_all(const SimConfig& cfg, std::uint64_t seed, bool parallel) {
    const std::vector<Check> checks{
        [] { return capacity_anchors(); },
        [&] { return replicator_tangency(cfg, seed); },
        [&] { return evogame_convergence(cfg); },
        [&] { return sort_oracle(seed); },
        [&] { return decode_feasibility(seed); },
        [] { return auction_hand_instance(); },
        [&] { return auction_properties(cfg, seed, false); },
        [&] { return auction_properties(cfg, seed, true); },
    };
    auto guarded = [](const Check& c) {
        try {
            return c();
        } catch (const std::exception& e) {
            return result("exception", false, e.what());
        }
    };
    std::vector<CheckResult> out;
    if (!parallel) {
        for (const auto& c : checks) out.push_back(guarded(c));
        return out;
    }
    std::vector<std::future<CheckResult>> pending;
    for (const auto& c : checks) pending.push_back(std::async(std::launch::async, guarded, c));
    for (auto& f : pending) out.push_back(f.get());
    return out;
}

}  // namespace fedcross::verify
