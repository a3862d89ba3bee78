#include "fedcross/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace fedcross {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) {
    throw ConfigError(ConfigError::Kind::invalid, what);
}

// Reads typed fields from one JSON object and remembers which keys were used
// so that leftovers can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) invalid(label() + " must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            invalid(label() + "." + key + " has the wrong type");
        }
    }

    void read_size(const char* key, std::size_t& out) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return;
        if (!it->is_number_integer() || it->get<long long>() < 0) {
            invalid(label() + "." + key + " must be a non-negative integer");
        }
        out = it->get<std::size_t>();
    }

    void read_u64(const char* key, std::uint64_t& out) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return;
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
            invalid(label() + "." + key + " must be a non-negative integer");
        }
        out = it->get<std::uint64_t>();
    }

    void read_range(const char* key, std::pair<double, double>& out) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return;
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
            invalid(label() + "." + key + " must be a [lo, hi] pair of numbers");
        }
        out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
    }

    template <typename Enum>
    void read_enum(const char* key, Enum& out, std::initializer_list<std::pair<const char*, Enum>> names) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return;
        if (it->is_string()) {
            for (const auto& [name, value] : names) {
                if (it->get<std::string>() == name) {
                    out = value;
                    return;
                }
            }
        }
        std::string allowed;
        for (const auto& [name, value] : names) allowed += std::string(allowed.empty() ? "" : ", ") + name;
        invalid(label() + "." + key + " must be one of: " + allowed);
    }

    // Sub-object (absent = empty object).
    json child(const char* key) {
        used_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) return json::object();
        return *it;
    }

    std::string child_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void collect_unknown(std::vector<std::string>& unknown) const {
        for (const auto& [key, value] : obj_.items()) {
            if (!used_.contains(key)) unknown.push_back(path_.empty() ? key : path_ + "." + key);
        }
    }

private:
    std::string label() const { return path_.empty() ? "config" : path_; }

    const json& obj_;
    std::string path_;
    std::set<std::string> used_;
};

const std::initializer_list<std::pair<const char*, channel::CompressionMode>> kCompressionNames{
    {"none", channel::CompressionMode::none}, {"top-fraction", channel::CompressionMode::top_fraction}};
const std::initializer_list<std::pair<const char*, evogame::CostModel>> kCostNames{
    {"capacity", evogame::CostModel::capacity},
    {"transmission-time", evogame::CostModel::transmission_time}};
const std::initializer_list<std::pair<const char*, migration::SelectionMode>> kSelectionNames{
    {"crowding", migration::SelectionMode::crowding_truncation},
    {"whole-front", migration::SelectionMode::whole_fronts}};
const std::initializer_list<std::pair<const char*, auction::GreedyRule>> kGreedyNames{
    {"ratio", auction::GreedyRule::ratio}, {"price", auction::GreedyRule::price}};
const std::initializer_list<std::pair<const char*, auction::PaymentRule>> kPaymentNames{
    {"threshold", auction::PaymentRule::threshold},
    {"paper-literal", auction::PaymentRule::paper_literal}};

template <typename Enum>
const char* enum_name(Enum value, std::initializer_list<std::pair<const char*, Enum>> names) {
    for (const auto& [name, v] : names) {
        if (v == value) return name;
    }
    return "?";
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void SimConfig::validate() const {
    if (n_servers < 1) invalid("n_servers must be >= 1");
    if (n_regions < 2 || n_regions > 3) invalid("n_regions must lie in [2, 3]");
    if (n_users < 50 || n_users > 300) invalid("n_users must lie in [50, 300]");
    if (!(congestion_coeff >= 1.0) || !std::isfinite(congestion_coeff)) invalid("congestion_coeff must be >= 1");
    if (!(reward_range.first >= 0.0) || !(reward_range.first <= reward_range.second) ||
        !std::isfinite(reward_range.second)) {
        invalid("reward_range must be an ordered pair of non-negative numbers");
    }
    if (!(momentum >= 0.0 && momentum <= 0.9)) invalid("momentum must lie in [0, 0.9]");
    if (!(p_move >= 0.0 && p_move <= 1.0)) invalid("p_move must lie in [0, 1]");
    if (!finite_positive(data_volume_range.first) || data_volume_range.first > data_volume_range.second ||
        !std::isfinite(data_volume_range.second)) {
        invalid("data_volume_range must be an ordered pair of positive numbers");
    }

    try {
        channel.params.validate();
        channel.privacy.validate();
        channel.compression.validate();
    } catch (const std::invalid_argument& e) {
        invalid(std::string("channel: ") + e.what());
    }
    if (!finite_positive(channel.capacity_ref)) invalid("channel.capacity_ref must be > 0");
    if (channel.gradient_dim < 1) invalid("channel.gradient_dim must be >= 1");
    if (!finite_positive(channel.bits_per_coordinate)) invalid("channel.bits_per_coordinate must be > 0");

    if (!(evogame.learning_rate >= 0.0) || !std::isfinite(evogame.learning_rate)) invalid("evogame.learning_rate must be >= 0");
    if (!(evogame.unit_cost >= 0.0)) invalid("evogame.unit_cost must be >= 0");
    if (!finite_positive(evogame.dt)) invalid("evogame.dt must be > 0");
    if (!finite_positive(evogame.task_bits)) invalid("evogame.task_bits must be > 0");
    if (!finite_positive(evogame.eq_tol)) invalid("evogame.eq_tol must be > 0");

    try {
        migration.ga.validate();
    } catch (const std::invalid_argument& e) {
        invalid(std::string("migration: ") + e.what());
    }
    if (!finite_positive(migration.required_capacity)) invalid("migration.required_capacity must be > 0");
    if (!(migration.early_exit_discount >= 0.0 && migration.early_exit_discount <= 1.0)) {
        invalid("migration.early_exit_discount must lie in [0, 1]");
    }

    try {
        auction.rules.validate();
    } catch (const std::invalid_argument& e) {
        invalid(std::string("auction: ") + e.what());
    }
    if (auction.rules.k_min > n_regions) invalid("auction.k_min cannot exceed n_regions");
    if (!finite_positive(auction.t_cmp) || !finite_positive(auction.t_max)) invalid("auction times must be > 0");
    if (!(auction.cost_floor > 0.0) || !(auction.cost_per_overhead >= 0.0) || !(auction.price_noise >= 0.0)) {
        invalid("auction cost model: cost_floor > 0, cost_per_overhead >= 0, price_noise >= 0");
    }

    if (!(accuracy.a_max > 0.0 && accuracy.a_max < 1.0)) invalid("accuracy.a_max must lie in (0, 1)");
    if (!finite_positive(accuracy.kappa)) invalid("accuracy.kappa must be > 0");
    if (!(accuracy.lambda >= 0.0 && accuracy.lambda <= 1.0)) invalid("accuracy.lambda must lie in [0, 1]");
}

evogame::GameParams SimConfig::game_params() const {
    evogame::GameParams p;
    p.rewards.resize(n_regions);
    for (std::size_t b = 0; b < n_regions; ++b) {
        const double t = n_regions == 1 ? 0.0 : static_cast<double>(b) / static_cast<double>(n_regions - 1);
        p.rewards[b] = rewards_enabled ? reward_range.first + (reward_range.second - reward_range.first) * t : 0.0;
    }
    p.data_volume.assign(n_regions, 1.0);
    p.unit_cost = evogame.unit_cost;
    p.learning_rate = evogame.learning_rate;
    p.cost_model = evogame.cost_model;
    p.task_bits = evogame.task_bits;
    return p;
}

bool operator==(const SimConfig& a, const SimConfig& b) { return to_json(a) == to_json(b); }

json to_json(const SimConfig& c) {
    json j;
    j["n_servers"] = c.n_servers;
    j["n_regions"] = c.n_regions;
    j["n_users"] = c.n_users;
    j["congestion_coeff"] = c.congestion_coeff;
    j["reward_range"] = {c.reward_range.first, c.reward_range.second};
    j["momentum"] = c.momentum;
    j["rounds"] = c.rounds;
    j["seed"] = c.seed;
    j["p_move"] = c.p_move;
    j["rewards_enabled"] = c.rewards_enabled;
    j["data_volume_range"] = {c.data_volume_range.first, c.data_volume_range.second};
    j["channel"] = {
        {"beta_mean", c.channel.params.beta_mean},
        {"p_max", c.channel.params.p_max},
        {"sigma_w2", c.channel.params.sigma_w2},
        {"block_length", c.channel.params.block_length},
        {"privacy_enabled", c.channel.privacy.enabled},
        {"sigma_p2", c.channel.privacy.sigma_p2},
        {"compression", enum_name(c.channel.compression.mode, kCompressionNames)},
        {"keep_fraction", c.channel.compression.keep_fraction},
        {"capacity_ref", c.channel.capacity_ref},
        {"gradient_dim", c.channel.gradient_dim},
        {"bits_per_coordinate", c.channel.bits_per_coordinate},
        {"perturb_first", c.channel.perturb_first},
    };
    j["evogame"] = {
        {"learning_rate", c.evogame.learning_rate},
        {"unit_cost", c.evogame.unit_cost},
        {"dt", c.evogame.dt},
        {"window_steps", c.evogame.window_steps},
        {"cost_model", enum_name(c.evogame.cost_model, kCostNames)},
        {"task_bits", c.evogame.task_bits},
        {"eq_tol", c.evogame.eq_tol},
    };
    j["migration"] = {
        {"pop_size", c.migration.ga.pop_size},
        {"t_max", c.migration.ga.t_max},
        {"eta_c", c.migration.ga.eta_c},
        {"eta_m", c.migration.ga.eta_m},
        {"p_c", c.migration.ga.p_c},
        {"p_m", c.migration.ga.p_m ? json(*c.migration.ga.p_m) : json(nullptr)},
        {"selection", enum_name(c.migration.ga.selection, kSelectionNames)},
        {"required_capacity", c.migration.required_capacity},
        {"queue_ttl", c.migration.queue_ttl},
        {"early_exit_discount", c.migration.early_exit_discount},
    };
    j["auction"] = {
        {"k_min", c.auction.rules.k_min},
        {"t_g", c.auction.rules.t_g},
        {"eta", c.auction.rules.eta},
        {"greedy", enum_name(c.auction.rules.greedy, kGreedyNames)},
        {"payment", enum_name(c.auction.rules.payment, kPaymentNames)},
        {"reserve_ratio", c.auction.rules.reserve_ratio},
        {"t_cmp", c.auction.t_cmp},
        {"t_max", c.auction.t_max},
        {"cost_floor", c.auction.cost_floor},
        {"cost_per_overhead", c.auction.cost_per_overhead},
        {"price_noise", c.auction.price_noise},
    };
    j["accuracy"] = {
        {"a_max", c.accuracy.a_max},
        {"kappa", c.accuracy.kappa},
        {"lambda", c.accuracy.lambda},
    };
    return j;
}

SimConfig config_from_json(const json& j) {
    SimConfig c;
    std::vector<std::string> unknown;

    ObjectReader top(j, "");
    top.read_size("n_servers", c.n_servers);
    top.read_size("n_regions", c.n_regions);
    top.read_size("n_users", c.n_users);
    top.read("congestion_coeff", c.congestion_coeff);
    top.read_range("reward_range", c.reward_range);
    top.read("momentum", c.momentum);
    top.read_size("rounds", c.rounds);
    top.read_u64("seed", c.seed);
    top.read("p_move", c.p_move);
    top.read("rewards_enabled", c.rewards_enabled);
    top.read_range("data_volume_range", c.data_volume_range);

    const json ch_json = top.child("channel");
    ObjectReader ch(ch_json, top.child_path("channel"));
    ch.read("beta_mean", c.channel.params.beta_mean);
    ch.read("p_max", c.channel.params.p_max);
    ch.read("sigma_w2", c.channel.params.sigma_w2);
    ch.read_u64("block_length", c.channel.params.block_length);
    ch.read("privacy_enabled", c.channel.privacy.enabled);
    ch.read("sigma_p2", c.channel.privacy.sigma_p2);
    ch.read_enum("compression", c.channel.compression.mode, kCompressionNames);
    ch.read("keep_fraction", c.channel.compression.keep_fraction);
    ch.read("capacity_ref", c.channel.capacity_ref);
    ch.read_size("gradient_dim", c.channel.gradient_dim);
    ch.read("bits_per_coordinate", c.channel.bits_per_coordinate);
    ch.read("perturb_first", c.channel.perturb_first);
    ch.collect_unknown(unknown);

    const json evo_json = top.child("evogame");
    ObjectReader evo(evo_json, top.child_path("evogame"));
    evo.read("learning_rate", c.evogame.learning_rate);
    evo.read("unit_cost", c.evogame.unit_cost);
    evo.read("dt", c.evogame.dt);
    evo.read_size("window_steps", c.evogame.window_steps);
    evo.read_enum("cost_model", c.evogame.cost_model, kCostNames);
    evo.read("task_bits", c.evogame.task_bits);
    evo.read("eq_tol", c.evogame.eq_tol);
    evo.collect_unknown(unknown);

    const json mig_json = top.child("migration");
    ObjectReader mig(mig_json, top.child_path("migration"));
    mig.read_size("pop_size", c.migration.ga.pop_size);
    mig.read_size("t_max", c.migration.ga.t_max);
    mig.read("eta_c", c.migration.ga.eta_c);
    mig.read("eta_m", c.migration.ga.eta_m);
    mig.read("p_c", c.migration.ga.p_c);
    {
        double p_m = -1.0;
        mig.read("p_m", p_m);
        if (p_m != -1.0) c.migration.ga.p_m = p_m;
    }
    mig.read_enum("selection", c.migration.ga.selection, kSelectionNames);
    mig.read("required_capacity", c.migration.required_capacity);
    mig.read_u64("queue_ttl", c.migration.queue_ttl);
    mig.read("early_exit_discount", c.migration.early_exit_discount);
    mig.collect_unknown(unknown);

    const json auc_json = top.child("auction");
    ObjectReader auc(auc_json, top.child_path("auction"));
    auc.read_size("k_min", c.auction.rules.k_min);
    auc.read_u64("t_g", c.auction.rules.t_g);
    auc.read("eta", c.auction.rules.eta);
    auc.read_enum("greedy", c.auction.rules.greedy, kGreedyNames);
    auc.read_enum("payment", c.auction.rules.payment, kPaymentNames);
    auc.read("reserve_ratio", c.auction.rules.reserve_ratio);
    auc.read("t_cmp", c.auction.t_cmp);
    auc.read("t_max", c.auction.t_max);
    auc.read("cost_floor", c.auction.cost_floor);
    auc.read("cost_per_overhead", c.auction.cost_per_overhead);
    auc.read("price_noise", c.auction.price_noise);
    auc.collect_unknown(unknown);

    const json acc_json = top.child("accuracy");
    ObjectReader acc(acc_json, top.child_path("accuracy"));
    acc.read("a_max", c.accuracy.a_max);
    acc.read("kappa", c.accuracy.kappa);
    acc.read("lambda", c.accuracy.lambda);
    acc.collect_unknown(unknown);

    top.collect_unknown(unknown);
    if (!unknown.empty()) {
        std::string list;
        for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
        invalid("unknown config keys: " + list);
    }
    c.validate();
    return c;
}

SimConfig parse_config_text(const std::string& text) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        SimConfig c;
        c.validate();
        return c;
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::malformed, std::string("malformed config: ") + e.what());
    }
    return config_from_json(j);
}

SimConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigError::Kind::missing_file, "config file not found: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

}  // namespace fedcross
