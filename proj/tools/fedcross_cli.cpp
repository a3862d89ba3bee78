// Command-line front end: simulate, evogame, migrate, auction, verify, replay.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedcross/config.hpp"
#include "fedcross/io.hpp"
#include "fedcross/sim.hpp"
#include "fedcross/verify.hpp"
#include "fedcross/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fedcross;

namespace {

enum ExitCode {
    kOk = 0,
    kUsage = 1,
    kConfigInvalid = 2,
    kRuntime = 3,
    kVerifyFailed = 4,
    kFileMissing = 5,
    kMalformed = 6,
};

class CliError : public std::runtime_error {
public:
    CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(kFileMissing, "file not found: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

json read_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw CliError(kMalformed, "malformed JSON in " + path + ": " + e.what());
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CliError(kUsage, "not a number list: " + text);
        }
    }
    return out;
}

// Everything needed to reproduce one run; serialised into the manifest.
struct Job {
    std::string command;
    SimConfig config;
    json options = json::object();
    std::string format = "csv";
};

struct Outputs {
    fs::path dir;
    json files = json::object();
    json schemas = json::object();

    std::ofstream open(const std::string& role, const std::string& name, const char* schema) {
        files[role] = name;
        schemas[role] = schema;
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw CliError(kRuntime, "cannot write " + (dir / name).string());
        return out;
    }
};

json manifest_json(const Job& job, const Outputs& outs, std::optional<double> duration) {
    return json{{"schema", io::kManifestSchema},
                {"artifact_version", kVersion},
                {"command", job.command},
                {"seed", job.config.seed},
                {"format", job.format},
                {"config", to_json(job.config)},
                {"options", job.options},
                {"outputs", outs.files},
                {"output_schemas", outs.schemas},
                {"duration_seconds", duration ? json(*duration) : json(nullptr)}};
}

void write_manifest(const Job& job, const Outputs& outs, std::optional<double> duration) {
    std::ofstream out(outs.dir / "manifest.json", std::ios::binary);
    if (!out) throw CliError(kRuntime, "cannot write manifest in " + outs.dir.string());
    out << manifest_json(job, outs, duration).dump(2) << '\n';
}

// Output names are fixed per command so the manifest can be written before
// any output exists.
void declare_outputs(const Job& job, Outputs& outs) {
    const bool csv = job.format == "csv";
    if (job.command == "simulate") {
        outs.files["metrics"] = csv ? "metrics.csv" : "metrics.jsonl";
        outs.schemas["metrics"] = io::kMetricsSchema;
    } else if (job.command == "evogame") {
        outs.files["trajectory"] = csv ? "trajectory.csv" : "trajectory.jsonl";
        outs.schemas["trajectory"] = io::kTrajectorySchema;
    } else if (job.command == "migrate") {
        outs.files["plan"] = "plan.json";
        outs.schemas["plan"] = io::kPlanSchema;
        outs.files["generations"] = "generations.csv";
        outs.schemas["generations"] = io::kGenerationSchema;
    } else if (job.command == "auction") {
        outs.files["outcome"] = "outcome.json";
        outs.schemas["outcome"] = io::kOutcomeSchema;
    } else if (job.command == "verify") {
        outs.files["report"] = "verify.jsonl";
        outs.schemas["report"] = "verify/1";
    }
}

int run_simulate(const Job& job, Outputs& outs) {
    const auto result = sim::run_simulation(job.config);
    auto out = outs.open("metrics", outs.files["metrics"].get<std::string>(), io::kMetricsSchema);
    if (job.format == "csv") io::write_metrics_csv(out, result.metrics);
    else io::write_metrics_jsonl(out, result.metrics);
    std::cout << "simulated " << result.metrics.size() << " rounds\n";
    return kOk;
}

int run_evogame(const Job& job, Outputs& outs) {
    const auto& cfg = job.config;
    const auto raw = job.options.at("x0").get<std::vector<double>>();
    if (raw.size() != cfg.n_regions) {
        throw CliError(kUsage, "--x0 needs " + std::to_string(cfg.n_regions) + " values (n_regions)");
    }
    const auto x0 = evogame::PopulationState::normalized(raw);
    const double t_end = job.options.at("t_end").get<double>();
    const auto steps = static_cast<std::size_t>(std::llround(t_end / cfg.evogame.dt));
    const auto params = cfg.game_params();
    const auto q = evogame::default_capacity(cfg.n_regions);
    const auto traj = evogame::integrate(x0, params, q, cfg.evogame.dt, steps);

    auto out = outs.open("trajectory", outs.files["trajectory"].get<std::string>(), io::kTrajectorySchema);
    if (job.format == "csv") io::write_trajectory_csv(out, traj);
    else io::write_trajectory_jsonl(out, traj);

    if (const auto eq = evogame::detect_equilibrium(traj, cfg.evogame.eq_tol)) {
        std::cout << "equilibrium at t=" << io::format_double(eq->time) << " x=";
        for (std::size_t b = 0; b < eq->state.size(); ++b) std::cout << (b ? "," : "") << io::format_double(eq->state[b]);
        std::cout << '\n';
    } else {
        std::cout << "no equilibrium by t=" << io::format_double(t_end) << '\n';
    }
    return kOk;
}

int run_migrate(const Job& job, Outputs& outs) {
    const auto inst = io::migration_instance_from_json(job.options.at("instance"), job.config.migration.ga);
    migration::OnlineQueue queue;
    for (const auto& t : inst.tasks) queue.push(t);
    Rng rng = make_rng(job.config.seed, {0x6d6967});
    const auto result = migration::run_migration(queue, inst.receivers, inst.ga, rng);

    auto plan_out = outs.open("plan", "plan.json", io::kPlanSchema);
    plan_out << io::to_json(result.plan).dump(2) << '\n';
    auto gen_out = outs.open("generations", "generations.csv", io::kGenerationSchema);
    io::write_generation_csv(gen_out, result.log);
    std::cout << "assigned " << result.plan.assigned_count() << " of " << result.plan.mapping.size() << " tasks\n";
    return kOk;
}

int run_auction(const Job& job, Outputs& outs) {
    const auto inst = io::auction_instance_from_json(job.options.at("instance"), job.config.auction.rules);
    const auto outcome = auction::run_auction(inst.bids, inst.config, inst.capacities);
    const std::string text = io::to_json(outcome).dump(2);
    auto out = outs.open("outcome", "outcome.json", io::kOutcomeSchema);
    out << text << '\n';
    std::cout << text << '\n';
    return kOk;
}

int run_verify(const Job& job, Outputs& outs) {
    const auto results = verify::run_all(job.config, job.config.seed, true);
    auto out = outs.open("report", "verify.jsonl", "verify/1");
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        out << json{{"check", r.name}, {"passed", r.passed}, {"detail", r.detail}}.dump() << '\n';
    }
    return all ? kOk : kVerifyFailed;
}

int execute(const Job& job, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError(kRuntime, "cannot create output directory " + dir.string());
    Outputs outs{dir};
    declare_outputs(job, outs);
    write_manifest(job, outs, std::nullopt);

    const auto start = std::chrono::steady_clock::now();
    int code = kOk;
    if (job.command == "simulate") code = run_simulate(job, outs);
    else if (job.command == "evogame") code = run_evogame(job, outs);
    else if (job.command == "migrate") code = run_migrate(job, outs);
    else if (job.command == "auction") code = run_auction(job, outs);
    else if (job.command == "verify") code = run_verify(job, outs);
    else throw CliError(kUsage, "unknown command in manifest: " + job.command);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    write_manifest(job, outs, took.count());
    return code;
}

Job job_from_manifest(const std::string& path) {
    const json m = read_json_file(path);
    if (!m.is_object() || m.value("schema", "") != io::kManifestSchema) {
        throw CliError(kConfigInvalid, path + " is not a run manifest");
    }
    Job job;
    job.command = m.at("command").get<std::string>();
    job.config = config_from_json(m.at("config"));
    job.options = m.at("options");
    job.format = m.at("format").get<std::string>();
    if (m.value("artifact_version", "") != kVersion) {
        std::cerr << "warning: manifest written by version " << m.value("artifact_version", "?") << ", running "
                  << kVersion << '\n';
    }
    return job;
}

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> rounds;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file (defaults when omitted)");
    cmd->add_option("--seed", f.seed, "RNG seed (overrides the config)");
    cmd->add_option("--rounds", f.rounds, "number of rounds (overrides the config)");
    cmd->add_option("--out", f.out, "output directory (default $FEDCROSS_OUT or .)");
    cmd->add_option("--format", f.format, "metrics/trajectory format")->check(CLI::IsMember({"csv", "jsonl"}));
}

SimConfig load_config(const CommonFlags& f) {
    SimConfig cfg = f.config_path.empty() ? SimConfig{} : parse_config(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.rounds) cfg.rounds = *f.rounds;
    cfg.validate();
    return cfg;
}

fs::path output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("FEDCROSS_OUT"); env && *env) return env;
    return ".";
}

int config_exit_code(const ConfigError& e) {
    switch (e.kind()) {
        case ConfigError::Kind::missing_file: return kFileMissing;
        case ConfigError::Kind::malformed: return kMalformed;
        case ConfigError::Kind::invalid: return kConfigInvalid;
    }
    return kConfigInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for region selection, task migration and procurement auctions in hierarchical federated learning"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonFlags flags;
    std::string x0_text = "0.18,0.32,0.50";
    double t_end = 500.0;
    std::optional<double> dt;
    std::string instance_path;
    std::string manifest_path;

    auto* simulate = app.add_subcommand("simulate", "run the full round loop and write per-round metrics");
    add_common(simulate, flags);

    auto* evogame_cmd = app.add_subcommand("evogame", "integrate the region-selection dynamics from x0");
    add_common(evogame_cmd, flags);
    evogame_cmd->add_option("--x0", x0_text, "initial proportions, comma separated (rescaled to sum 1)");
    evogame_cmd->add_option("--t-end", t_end, "integration horizon")->check(CLI::PositiveNumber);
    evogame_cmd->add_option("--dt", dt, "Euler step (overrides the config)")->check(CLI::PositiveNumber);

    auto* migrate = app.add_subcommand("migrate", "reassign a queue of interrupted tasks");
    add_common(migrate, flags);
    migrate->add_option("--instance", instance_path, "migration instance JSON")->required();

    auto* auction_cmd = app.add_subcommand("auction", "run the procurement auction on a bid file");
    add_common(auction_cmd, flags);
    auction_cmd->add_option("--instance", instance_path, "auction instance JSON")->required();

    auto* verify_cmd = app.add_subcommand("verify", "run mechanism and oracle self-checks");
    add_common(verify_cmd, flags);

    auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    replay->add_option("--out", flags.out, "output directory (default $FEDCROSS_OUT or .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        Job job;
        if (replay->parsed()) {
            job = job_from_manifest(manifest_path);
        } else {
            job.config = load_config(flags);
            job.format = flags.format;
            if (simulate->parsed()) {
                job.command = "simulate";
            } else if (evogame_cmd->parsed()) {
                job.command = "evogame";
                if (dt) job.config.evogame.dt = *dt;
                job.options = {{"x0", parse_list(x0_text)}, {"t_end", t_end}};
            } else if (migrate->parsed()) {
                job.command = "migrate";
                job.options = {{"instance", read_json_file(instance_path)}};
            } else if (auction_cmd->parsed()) {
                job.command = "auction";
                job.options = {{"instance", read_json_file(instance_path)}};
            } else {
                job.command = "verify";
            }
        }
        return execute(job, output_dir(flags.out));
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_exit_code(e);
    } catch (const io::InstanceError& e) {
        std::cerr << "instance error: " << e.what() << '\n';
        return kConfigInvalid;
    } catch (const auction::UnsatisfiableAuction& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
