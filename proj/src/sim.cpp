#include "fedcross/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fedcross::sim {

namespace {

// Stream tags for derive_seed().
enum StreamTag : std::uint64_t {
    kInitStream = 0x1001,
    kChannelStream = 0x2002,
    kGradientStream = 0x3003,
    kRehomeStream = 0x4004,
    kTriggerStream = 0x5005,
    kMigrationStream = 0x6006,
    kAuctionStream = 0x7007,
};

std::vector<std::size_t> region_counts(std::span<const UserState> users, std::size_t regions) {
    std::vector<std::size_t> counts(regions, 0);
    for (const UserState& u : users) ++counts.at(u.region);
    return counts;
}

// Largest-remainder apportionment of `total` users to proportions x.
std::vector<std::size_t> apportion(const evogame::PopulationState& x, std::size_t total) {
    const std::size_t n = x.size();
    std::vector<std::size_t> counts(n);
    std::vector<std::pair<double, std::size_t>> remainders(n);
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < n; ++b) {
        const double exact = x[b] * static_cast<double>(total);
        counts[b] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[b];
        remainders[b] = {exact - static_cast<double>(counts[b]), b};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % n].second];
    return counts;
}

// Moves the fewest users needed to reach `target` head counts. Surplus users
// are drawn uniformly from over-full regions and sent to under-full regions
// in index order.
std::size_t rehome(std::vector<UserState>& users, const std::vector<std::size_t>& target, Rng& rng) {
    const std::size_t regions = target.size();
    std::vector<std::vector<std::size_t>> members(regions);
    for (std::size_t i = 0; i < users.size(); ++i) members[users[i].region].push_back(i);

    std::vector<std::size_t> movers;
    for (std::size_t b = 0; b < regions; ++b) {
        if (members[b].size() <= target[b]) continue;
        std::shuffle(members[b].begin(), members[b].end(), rng);
        const std::size_t surplus = members[b].size() - target[b];
        movers.insert(movers.end(), members[b].begin(), members[b].begin() + static_cast<std::ptrdiff_t>(surplus));
    }
    std::size_t next = 0;
    for (std::size_t b = 0; b < regions; ++b) {
        for (std::size_t have = members[b].size(); have < target[b] && next < movers.size(); ++have) {
            users[movers[next++]].region = b;
        }
    }
    return movers.size();
}

double mean_of(const std::vector<double>& v, double fallback) {
    if (v.empty()) return fallback;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TriggerResult trigger_migrations(std::span<const UserState> users,
                                 const evogame::PopulationState& proportions,
                                 const evogame::GameParams& params, double p_move,
                                 double congestion_coeff, double required_capacity,
                                 std::uint64_t round, std::uint64_t first_task_id, Rng& rng) {
    const std::size_t regions = proportions.size();
    const auto counts = region_counts(users, regions);
    const double mean_load = static_cast<double>(users.size()) / static_cast<double>(regions);

    TriggerResult out;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const UserState& u = users[i];
        const double draw = uniform01(rng);
        const bool crowded = static_cast<double>(counts[u.region]) > mean_load;
        const double p = std::min(1.0, crowded ? p_move * congestion_coeff : p_move);
        const double utility = evogame::region_utility(proportions, u.region, params, u.capacity);
        if (utility < 0.0 || draw < p) out.departing.push_back(i);
    }

    std::uint64_t task_id = first_task_id;
    for (std::size_t i : out.departing) {
        const UserState& u = users[i];
        const double progress = uniform01(rng);
        std::size_t dest = u.region;
        if (regions > 1) {
            std::uniform_int_distribution<std::size_t> pick(0, regions - 2);
            dest = pick(rng);
            if (dest >= u.region) ++dest;
        }
        out.destinations.push_back(dest);

        migration::Task task;
        if (u.active_task) task = *u.active_task;
        else task.required_capacity = required_capacity;
        task.id = task_id++;
        task.origin_user = u.id;
        task.progress = progress;
        task.data_size = std::max(1.0, task.data_size * (1.0 - progress));
        task.enqueued_round = round;
        out.queued.push_back(task);
    }
    return out;
}

double synthetic_accuracy(double effective_data, std::uint64_t rounds, double interruption_rate,
                          const AccuracyConfig& cfg) {
    if (effective_data <= 0.0 || rounds == 0) return 0.0;
    const double base = cfg.a_max * (1.0 - std::exp(-cfg.kappa * effective_data * static_cast<double>(rounds)));
    const double rate = std::clamp(interruption_rate, 0.0, 1.0);
    return base * (1.0 - cfg.lambda * rate);
}

double participation_rate(std::size_t uploading, std::size_t total) {
    if (total == 0) return 0.0;
    return static_cast<double>(uploading) / static_cast<double>(total);
}

std::vector<double> region_shares(std::span<const UserState> users, std::size_t regions) {
    const auto counts = region_counts(users, regions);
    std::vector<double> x(regions, 0.0);
    if (users.empty()) return x;
    for (std::size_t b = 0; b < regions; ++b) {
        x[b] = static_cast<double>(counts[b]) / static_cast<double>(users.size());
    }
    return x;
}

SimState initial_state(const SimConfig& cfg) {
    cfg.validate();
    Rng rng = make_rng(cfg.seed, {kInitStream});
    SimState s;
    s.users.resize(cfg.n_users);
    std::uniform_real_distribution<double> volume(cfg.data_volume_range.first, cfg.data_volume_range.second);
    for (std::size_t i = 0; i < cfg.n_users; ++i) {
        s.users[i].id = i;
        s.users[i].data_volume = cfg.data_volume_range.first == cfg.data_volume_range.second
                                     ? cfg.data_volume_range.first
                                     : volume(rng);
    }
    // Users enter regions at random with balanced head counts.
    std::vector<std::size_t> order(cfg.n_users);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) s.users[order[k]].region = k % cfg.n_regions;

    s.stations.resize(cfg.n_regions);
    for (std::size_t b = 0; b < cfg.n_regions; ++b) s.stations[b].id = b;
    s.queues.resize(cfg.n_regions);
    return s;
}

RoundMetrics run_round(SimState& state, const SimConfig& cfg) {
    const std::size_t regions = cfg.n_regions;
    const std::uint64_t r = state.round;
    auto& users = state.users;
    RoundMetrics m;
    m.round = r;

    // Channel realisation for this round.
    std::vector<channel::ChannelState> states(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        states[i] = channel::sample_channel(cfg.channel.params, r,
                                            derive_seed(cfg.seed, {kChannelStream, users[i].id}));
        users[i].channel = states[i];
    }
    std::vector<double> capacities(users.size());
    channel::capacity_batch(states, cfg.channel.params.sigma_w2, capacities);
    for (std::size_t i = 0; i < users.size(); ++i) users[i].capacity = capacities[i];

    const double global_volume = mean_of([&] {
        std::vector<double> v;
        for (const auto& u : users) v.push_back(u.data_volume);
        return v;
    }(), 1.0);
    const double global_capacity = mean_of(capacities, 1.0);

    // Stage 1: region formation.
    evogame::GameParams game = cfg.game_params();
    std::vector<double> region_q(regions), region_m(regions);
    {
        std::vector<std::vector<double>> qs(regions), ms(regions);
        for (const auto& u : users) {
            qs[u.region].push_back(u.capacity);
            ms[u.region].push_back(u.data_volume);
        }
        for (std::size_t b = 0; b < regions; ++b) {
            region_q[b] = mean_of(qs[b], global_capacity);
            region_m[b] = mean_of(ms[b], global_volume);
        }
    }
    game.data_volume = region_m;
    evogame::PopulationState x = evogame::PopulationState::normalized(region_shares(users, regions));
    if (cfg.evogame.window_steps > 0) {
        const auto traj = evogame::integrate(x, game, region_q, cfg.evogame.dt, cfg.evogame.window_steps);
        x = traj.states.back();
    }
    {
        Rng rng = make_rng(cfg.seed, {kRehomeStream, r});
        m.rehomed_users = rehome(users, apportion(x, users.size()), rng);
    }

    // Stage 2: local training, departures, migration of interrupted tasks.
    std::vector<double> upload_bits(users.size(), 0.0);
    for (std::size_t i = 0; i < users.size(); ++i) {
        UserState& u = users[i];
        Rng rng = make_rng(cfg.seed, {kGradientStream, r, u.id});
        std::vector<double> g(cfg.channel.gradient_dim);
        std::normal_distribution<double> unit(0.0, 1.0);
        for (double& v : g) v = unit(rng);
        channel::CompressionSpec spec = cfg.channel.compression;
        if (spec.mode == channel::CompressionMode::top_fraction) {
            spec.keep_fraction = std::clamp(spec.keep_fraction * std::min(1.0, u.capacity / cfg.channel.capacity_ref),
                                            1.0 / static_cast<double>(g.size()), 1.0);
        }
        std::vector<double> sent;
        if (cfg.channel.perturb_first) {
            sent = channel::compress(channel::perturb_gradient(g, cfg.channel.privacy, rng), spec);
        } else {
            sent = channel::compress(g, spec);
            const auto noisy = channel::perturb_gradient(sent, cfg.channel.privacy, rng);
            for (std::size_t k = 0; k < sent.size(); ++k) {
                if (sent[k] != 0.0) sent[k] = noisy[k];
            }
        }
        const auto nnz = static_cast<double>(std::count_if(sent.begin(), sent.end(), [](double v) { return v != 0.0; }));
        upload_bits[i] = std::max(1.0, nnz) * cfg.channel.bits_per_coordinate;

        migration::Task task;
        task.id = 0;
        task.origin_user = u.id;
        task.required_capacity = cfg.migration.required_capacity * u.data_volume / global_volume;
        task.data_size = upload_bits[i];
        task.progress = 0.0;
        task.enqueued_round = r;
        u.active_task = task;
    }

    TriggerResult trig;
    {
        Rng rng = make_rng(cfg.seed, {kTriggerStream, r});
        trig = trigger_migrations(users, x, game, cfg.p_move, cfg.congestion_coeff,
                                  cfg.migration.required_capacity, r, state.next_task_id, rng);
    }
    state.next_task_id += trig.queued.size();
    m.migrations_triggered = trig.departing.size();

    std::vector<char> departing(users.size(), 0);
    for (std::size_t i : trig.departing) departing[i] = 1;
    std::map<UserId, std::size_t> index_of;
    for (std::size_t i = 0; i < users.size(); ++i) index_of[users[i].id] = i;

    std::vector<std::size_t> region_population(regions, 0), region_departures(regions, 0);
    for (std::size_t i = 0; i < users.size(); ++i) {
        ++region_population[users[i].region];
        if (departing[i]) ++region_departures[users[i].region];
    }

    // Queue bookkeeping: expire stale tasks, then enqueue new interruptions.
    for (std::size_t b = 0; b < regions; ++b) {
        auto& q = state.queues[b];
        m.tasks_carried_in += q.size();
        std::vector<migration::TaskId> stale;
        for (const auto& t : q.tasks()) {
            if (r - t.enqueued_round >= cfg.migration.queue_ttl) stale.push_back(t.id);
        }
        m.tasks_expired += stale.size();
        q.remove(stale);
    }
    for (std::size_t k = 0; k < trig.departing.size(); ++k) {
        const UserState& u = users[trig.departing[k]];
        state.queues[u.region].push(trig.queued[k]);
        users[trig.departing[k]].active_task.reset();
    }
    m.tasks_new = trig.queued.size();

    std::vector<double> overhead(regions, 0.0);
    std::vector<double> effective_data(regions, 0.0);
    std::vector<std::map<std::size_t, double>> reward_weight(regions);  // user index -> weight
    std::size_t uploading = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const UserState& u = users[i];
        if (departing[i]) continue;  // counted through its migrated task below
        ++uploading;
        overhead[u.region] += upload_bits[i] / u.capacity;
        effective_data[u.region] += u.data_volume;
        reward_weight[u.region][i] += u.data_volume;
    }

    for (std::size_t b = 0; b < regions; ++b) {
        auto& q = state.queues[b];
        if (q.empty()) continue;
        std::vector<migration::Receiver> receivers;
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (!departing[i] && users[i].region == b) receivers.push_back({users[i].id, users[i].capacity});
        }
        // With nobody left to host, every plan leaves the whole queue unassigned.
        migration::AssignmentPlan plan;
        if (!receivers.empty()) {
            Rng rng = make_rng(cfg.seed, {kMigrationStream, r, b});
            plan = migration::run_migration(q, receivers, cfg.migration.ga, rng).plan;
        }

        std::vector<migration::TaskId> done;
        for (const auto& task : q.tasks()) {
            const auto recv = plan.receiver_of(task.id);
            const double origin_volume = users[index_of.at(task.origin_user)].data_volume;
            if (!recv) {
                if (task.enqueued_round == r) effective_data[b] += task.progress * origin_volume;
                continue;
            }
            done.push_back(task.id);
            const std::size_t ri = index_of.at(*recv);
            overhead[b] += task.data_size / users[ri].capacity;
            effective_data[b] += origin_volume;
            reward_weight[b][ri] += origin_volume * (1.0 - task.progress);
        }
        m.migrations_reassigned += done.size();
        q.remove(done);
    }
    for (std::size_t k = 0; k < trig.departing.size(); ++k) {
        const std::size_t i = trig.departing[k];
        const UserState& u = users[i];
        reward_weight[u.region][i] += cfg.migration.early_exit_discount * trig.queued[k].progress * u.data_volume;
    }
    for (const auto& q : state.queues) m.tasks_queued_out += q.size();
    m.comm_overhead = std::accumulate(overhead.begin(), overhead.end(), 0.0);
    m.participation_rate = participation_rate(uploading, users.size());

    // Stage 3: procurement auction.
    std::vector<auction::Bid> bids;
    std::vector<double> candidate(regions, 0.0);
    auction::CapacityMap bs_capacity;
    {
        Rng rng = make_rng(cfg.seed, {kAuctionStream, r});
        std::uniform_real_distribution<double> noise(0.0, 1.0);
        for (std::size_t b = 0; b < regions; ++b) {
            const double rate = region_population[b] == 0
                                    ? 0.0
                                    : static_cast<double>(region_departures[b]) / static_cast<double>(region_population[b]);
            candidate[b] = synthetic_accuracy(effective_data[b], state.stations[b].rounds_trained + 1, rate, cfg.accuracy);
            const double jitter = noise(rng);
            bs_capacity[b] = region_q[b];
            if (candidate[b] <= 0.0) continue;
            auction::Bid bid;
            bid.bs_id = b;
            bid.schedule_id = 0;
            bid.true_cost = cfg.auction.cost_floor + cfg.auction.cost_per_overhead * overhead[b];
            bid.price = bid.true_cost + cfg.auction.price_noise * jitter;
            bid.accuracy = candidate[b];
            bid.quality = candidate[b];
            bid.t_cmp = cfg.auction.t_cmp;
            bid.t_max = cfg.auction.t_max;
            bids.push_back(bid);
        }
    }
    std::optional<auction::AuctionOutcome> outcome;
    try {
        outcome = auction::run_auction(bids, cfg.auction.rules, bs_capacity);
    } catch (const auction::UnsatisfiableAuction&) {
        m.auction_unsatisfiable = true;
    }

    // Stage 4: aggregation at the winners and reward distribution.
    if (outcome) {
        m.total_payment = outcome->total_payment;
        for (std::size_t k = 0; k < outcome->winners.size(); ++k) {
            const std::size_t b = outcome->winners[k].bs_id;
            m.winners.push_back(b);
            state.stations[b].rounds_trained += 1;
            state.stations[b].accuracy = candidate[b];
            if (!cfg.rewards_enabled) continue;
            const double pay = outcome->payments[k].payment;
            if (!(pay > 0.0)) continue;
            double total_weight = 0.0;
            for (const auto& [i, w] : reward_weight[b]) total_weight += w;
            if (!(total_weight > 0.0)) continue;
            for (const auto& [i, w] : reward_weight[b]) {
                const double share = pay * (w / total_weight);
                users[i].cumulative_reward += share;
                m.rewards_distributed += share;
            }
        }
    }
    for (const auto& st : state.stations) m.regional_accuracy.push_back(st.accuracy);

    // Departing users arrive in their new regions for the next round.
    for (std::size_t k = 0; k < trig.departing.size(); ++k) users[trig.departing[k]].region = trig.destinations[k];
    m.region_proportions = region_shares(users, regions);

    state.round += 1;
    return m;
}

SimResult run_simulation(const SimConfig& cfg) {
    SimResult out{initial_state(cfg), {}};
    out.metrics.reserve(cfg.rounds);
    for (std::size_t k = 0; k < cfg.rounds; ++k) out.metrics.push_back(run_round(out.final_state, cfg));
    return out;
}

nlohmann::json to_json(const RoundMetrics& m) {
    return nlohmann::json{
        {"round", m.round},
        {"region_proportions", m.region_proportions},
        {"migrations_triggered", m.migrations_triggered},
        {"migrations_reassigned", m.migrations_reassigned},
        {"comm_overhead", m.comm_overhead},
        {"regional_accuracy", m.regional_accuracy},
        {"total_payment", m.total_payment},
        {"rewards_distributed", m.rewards_distributed},
        {"participation_rate", m.participation_rate},
        {"auction_unsatisfiable", m.auction_unsatisfiable},
        {"winners", m.winners},
        {"tasks_carried_in", m.tasks_carried_in},
        {"tasks_new", m.tasks_new},
        {"tasks_expired", m.tasks_expired},
        {"tasks_queued_out", m.tasks_queued_out},
        {"rehomed_users", m.rehomed_users},
    };
}

}  // namespace fedcross::sim
