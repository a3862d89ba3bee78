#include "fedcross/io.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace fedcross::io {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw InstanceError(what); }

double number(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) bad(where + "." + key + " must be a number");
    return it->get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (!it->is_number()) bad(where + "." + key + " must be a number");
    return it->get<double>();
}

std::uint64_t index(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer() || it->get<long long>() < 0) {
        bad(where + "." + key + " must be a non-negative integer");
    }
    return it->get<std::uint64_t>();
}

std::uint64_t index_or(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    return index(obj, key, where);
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) bad(where + " must be an object");
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    std::set<std::string> known(keys.begin(), keys.end());
    std::string unknown;
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) bad("unknown keys in " + where + ": " + unknown);
}

template <typename Enum>
Enum parse_enum(const json& obj, const char* key, Enum fallback,
                std::initializer_list<std::pair<const char*, Enum>> names, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    if (it->is_string()) {
        for (const auto& [name, value] : names) {
            if (it->get<std::string>() == name) return value;
        }
    }
    bad(where + "." + key + " has an unrecognised value");
}

template <typename Enum>
std::string enum_text(Enum value, std::initializer_list<std::pair<const char*, Enum>> names) {
    for (const auto& [name, v] : names) {
        if (v == value) return name;
    }
    return "?";
}

const std::initializer_list<std::pair<const char*, auction::GreedyRule>> kGreedy{
    {"ratio", auction::GreedyRule::ratio}, {"price", auction::GreedyRule::price}};
const std::initializer_list<std::pair<const char*, auction::PaymentRule>> kPayment{
    {"threshold", auction::PaymentRule::threshold}, {"paper-literal", auction::PaymentRule::paper_literal}};
const std::initializer_list<std::pair<const char*, migration::SelectionMode>> kSelection{
    {"crowding", migration::SelectionMode::crowding_truncation},
    {"whole-front", migration::SelectionMode::whole_fronts}};

json bid_json(const auction::Bid& b) {
    return json{{"bs", b.bs_id},         {"schedule", b.schedule_id}, {"price", b.price},
                {"accuracy", b.accuracy}, {"quality", b.quality},      {"t_cmp", b.t_cmp},
                {"t_max", b.t_max},       {"true_cost", b.true_cost}};
}

}  // namespace

AuctionInstance auction_instance_from_json(const json& j, const auction::AuctionConfig& defaults) {
    require_object(j, "instance");
    reject_unknown(j, {"bids", "config", "capacities"}, "instance");
    AuctionInstance inst;
    inst.config = defaults;

    if (!j.contains("bids") || !j.at("bids").is_array()) bad("instance.bids must be an array");
    for (std::size_t i = 0; i < j.at("bids").size(); ++i) {
        const json& b = j.at("bids")[i];
        const std::string where = "bids[" + std::to_string(i) + "]";
        require_object(b, where);
        reject_unknown(b, {"bs", "schedule", "price", "accuracy", "quality", "t_cmp", "t_max", "true_cost"}, where);
        auction::Bid bid;
        bid.bs_id = index(b, "bs", where);
        bid.schedule_id = index_or(b, "schedule", 0, where);
        bid.price = number(b, "price", where);
        bid.accuracy = number(b, "accuracy", where);
        bid.quality = number(b, "quality", where);
        bid.t_cmp = number(b, "t_cmp", where);
        bid.t_max = number(b, "t_max", where);
        bid.true_cost = number_or(b, "true_cost", bid.price, where);
        try {
            bid.validate();
        } catch (const std::invalid_argument& e) {
            bad(where + ": " + e.what());
        }
        inst.bids.push_back(bid);
    }

    if (j.contains("config")) {
        const json& c = j.at("config");
        require_object(c, "config");
        reject_unknown(c, {"k_min", "t_g", "eta", "greedy", "payment", "reserve_ratio"}, "config");
        inst.config.k_min = index_or(c, "k_min", inst.config.k_min, "config");
        inst.config.t_g = index_or(c, "t_g", inst.config.t_g, "config");
        inst.config.eta = number_or(c, "eta", inst.config.eta, "config");
        inst.config.greedy = parse_enum(c, "greedy", inst.config.greedy, kGreedy, "config");
        inst.config.payment = parse_enum(c, "payment", inst.config.payment, kPayment, "config");
        inst.config.reserve_ratio = number_or(c, "reserve_ratio", inst.config.reserve_ratio, "config");
    }
    try {
        inst.config.validate();
    } catch (const std::invalid_argument& e) {
        bad(std::string("config: ") + e.what());
    }

    if (!j.contains("capacities") || !j.at("capacities").is_object()) {
        bad("instance.capacities must map base station ids to capacities");
    }
    for (const auto& [key, value] : j.at("capacities").items()) {
        std::uint64_t bs = 0;
        const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), bs);
        if (ec != std::errc{} || ptr != key.data() + key.size()) bad("capacities key '" + key + "' is not a base station id");
        if (!value.is_number() || !(value.get<double>() >= 0.0)) bad("capacities." + key + " must be a number >= 0");
        inst.capacities[bs] = value.get<double>();
    }
    for (const auto& b : inst.bids) {
        if (!inst.capacities.contains(b.bs_id)) bad("no capacity given for base station " + std::to_string(b.bs_id));
    }
    return inst;
}

json to_json(const AuctionInstance& inst) {
    json bids = json::array();
    for (const auto& b : inst.bids) bids.push_back(bid_json(b));
    json caps = json::object();
    for (const auto& [bs, q] : inst.capacities) caps[std::to_string(bs)] = q;
    return json{{"bids", bids},
                {"config",
                 {{"k_min", inst.config.k_min},
                  {"t_g", inst.config.t_g},
                  {"eta", inst.config.eta},
                  {"greedy", enum_text(inst.config.greedy, kGreedy)},
                  {"payment", enum_text(inst.config.payment, kPayment)},
                  {"reserve_ratio", inst.config.reserve_ratio}}},
                {"capacities", caps}};
}

json to_json(const auction::AuctionOutcome& outcome) {
    json winners = json::array();
    for (const auto& w : outcome.winners) winners.push_back(bid_json(w));
    json selection = json::object();
    for (const auto& [bs, y] : outcome.selection) selection[std::to_string(bs)] = y;
    json payments = json::array();
    for (const auto& p : outcome.payments) {
        payments.push_back({{"bs", p.bs_id}, {"schedule", p.schedule_id}, {"payment", p.payment}, {"reserve", p.reserve}});
    }
    return json{{"winners", winners},
                {"selection", selection},
                {"payments", payments},
                {"total_payment", outcome.total_payment},
                {"critical_bid", outcome.critical_bid ? bid_json(*outcome.critical_bid) : json(nullptr)}};
}

MigrationInstance migration_instance_from_json(const json& j, const migration::GaParams& defaults) {
    require_object(j, "instance");
    reject_unknown(j, {"tasks", "receivers", "ga"}, "instance");
    MigrationInstance inst;
    inst.ga = defaults;

    if (!j.contains("tasks") || !j.at("tasks").is_array()) bad("instance.tasks must be an array");
    std::set<migration::TaskId> ids;
    for (std::size_t i = 0; i < j.at("tasks").size(); ++i) {
        const json& t = j.at("tasks")[i];
        const std::string where = "tasks[" + std::to_string(i) + "]";
        require_object(t, where);
        reject_unknown(t, {"id", "origin_user", "required_capacity", "data_size", "progress"}, where);
        migration::Task task;
        task.id = index(t, "id", where);
        task.origin_user = index_or(t, "origin_user", 0, where);
        task.required_capacity = number(t, "required_capacity", where);
        task.data_size = number(t, "data_size", where);
        task.progress = number_or(t, "progress", 0.0, where);
        try {
            task.validate();
        } catch (const std::invalid_argument& e) {
            bad(where + ": " + e.what());
        }
        if (!ids.insert(task.id).second) bad("duplicate task id " + std::to_string(task.id));
        inst.tasks.push_back(task);
    }

    if (!j.contains("receivers") || !j.at("receivers").is_array()) bad("instance.receivers must be an array");
    for (std::size_t i = 0; i < j.at("receivers").size(); ++i) {
        const json& r = j.at("receivers")[i];
        const std::string where = "receivers[" + std::to_string(i) + "]";
        require_object(r, where);
        reject_unknown(r, {"id", "capacity"}, where);
        migration::Receiver recv{index(r, "id", where), number(r, "capacity", where)};
        if (!(recv.capacity >= 0.0) || !std::isfinite(recv.capacity)) bad(where + ".capacity must be finite and >= 0");
        inst.receivers.push_back(recv);
    }

    if (j.contains("ga")) {
        const json& g = j.at("ga");
        require_object(g, "ga");
        reject_unknown(g, {"pop_size", "t_max", "eta_c", "eta_m", "p_c", "p_m", "selection"}, "ga");
        inst.ga.pop_size = index_or(g, "pop_size", inst.ga.pop_size, "ga");
        inst.ga.t_max = index_or(g, "t_max", inst.ga.t_max, "ga");
        inst.ga.eta_c = number_or(g, "eta_c", inst.ga.eta_c, "ga");
        inst.ga.eta_m = number_or(g, "eta_m", inst.ga.eta_m, "ga");
        inst.ga.p_c = number_or(g, "p_c", inst.ga.p_c, "ga");
        if (g.contains("p_m") && !g.at("p_m").is_null()) inst.ga.p_m = number(g, "p_m", "ga");
        inst.ga.selection = parse_enum(g, "selection", inst.ga.selection, kSelection, "ga");
    }
    try {
        inst.ga.validate();
    } catch (const std::invalid_argument& e) {
        bad(std::string("ga: ") + e.what());
    }
    return inst;
}

json to_json(const MigrationInstance& inst) {
    json tasks = json::array();
    for (const auto& t : inst.tasks) {
        tasks.push_back({{"id", t.id},
                         {"origin_user", t.origin_user},
                         {"required_capacity", t.required_capacity},
                         {"data_size", t.data_size},
                         {"progress", t.progress}});
    }
    json receivers = json::array();
    for (const auto& r : inst.receivers) receivers.push_back({{"id", r.id}, {"capacity", r.capacity}});
    return json{{"tasks", tasks},
                {"receivers", receivers},
                {"ga",
                 {{"pop_size", inst.ga.pop_size},
                  {"t_max", inst.ga.t_max},
                  {"eta_c", inst.ga.eta_c},
                  {"eta_m", inst.ga.eta_m},
                  {"p_c", inst.ga.p_c},
                  {"p_m", inst.ga.p_m ? json(*inst.ga.p_m) : json(nullptr)},
                  {"selection", enum_text(inst.ga.selection, kSelection)}}}};
}

json to_json(const migration::AssignmentPlan& plan) {
    json mapping = json::array();
    for (const auto& a : plan.mapping) {
        mapping.push_back({{"task", a.task}, {"receiver", a.receiver ? json(*a.receiver) : json(nullptr)}});
    }
    return json{{"mapping", mapping},
                {"objectives", plan.objectives},
                {"assigned", plan.assigned_count()},
                {"unassigned", plan.unassigned_count()}};
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const evogame::Trajectory& traj) {
    const std::size_t b = traj.states.empty() ? 0 : traj.states.front().size();
    out << "t";
    for (std::size_t k = 1; k <= b; ++k) out << ",x_" << k;
    for (std::size_t k = 1; k <= b; ++k) out << ",dx_" << k;
    out << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format_double(traj.times[i]);
        for (double x : traj.states[i].values()) out << ',' << format_double(x);
        for (double d : traj.derivatives[i]) out << ',' << format_double(d);
        out << '\n';
    }
}

void write_trajectory_jsonl(std::ostream& out, const evogame::Trajectory& traj) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto x = traj.states[i].values();
        out << json{{"t", traj.times[i]}, {"x", std::vector<double>(x.begin(), x.end())}, {"dx", traj.derivatives[i]}}.dump()
            << '\n';
    }
}

void write_generation_csv(std::ostream& out, const std::vector<migration::GenerationLog>& log) {
    out << "gen,best_f1,best_f2,front1_size,assigned,unassigned\n";
    for (const auto& g : log) {
        out << g.gen << ',' << format_double(g.best_f1) << ',' << format_double(g.best_f2) << ','
            << g.front1_size << ',' << g.assigned << ',' << g.unassigned << '\n';
    }
}

void write_metrics_jsonl(std::ostream& out, const std::vector<sim::RoundMetrics>& metrics) {
    for (const auto& m : metrics) out << sim::to_json(m).dump() << '\n';
}

void write_metrics_csv(std::ostream& out, const std::vector<sim::RoundMetrics>& metrics) {
    const std::size_t b = metrics.empty() ? 0 : metrics.front().region_proportions.size();
    out << "round";
    for (std::size_t k = 1; k <= b; ++k) out << ",x_" << k;
    out << ",migrations_triggered,migrations_reassigned,comm_overhead";
    for (std::size_t k = 1; k <= b; ++k) out << ",accuracy_" << k;
    out << ",total_payment,rewards_distributed,participation_rate,auction_unsatisfiable\n";
    for (const auto& m : metrics) {
        out << m.round;
        for (double x : m.region_proportions) out << ',' << format_double(x);
        out << ',' << m.migrations_triggered << ',' << m.migrations_reassigned << ',' << format_double(m.comm_overhead);
        for (double a : m.regional_accuracy) out << ',' << format_double(a);
        out << ',' << format_double(m.total_payment) << ',' << format_double(m.rewards_distributed) << ','
            << format_double(m.participation_rate) << ',' << (m.auction_unsatisfiable ? 1 : 0) << '\n';
    }
}

}  // namespace fedcross::io
