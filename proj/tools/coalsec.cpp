#include "coalsec/error.hpp"
#include "coalsec/io.hpp"
#include "coalsec/stability.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef COALSEC_VERSION
#define COALSEC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coalsec;

namespace {

struct CommonOptions
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::vector<std::string> protocols;
    bool trace = false;
    std::size_t jobs = 1;
};

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Session
{
public:
    Session(std::string command, const CommonOptions& opts)
        : command_(std::move(command)), started_(utc_now()), out_(opts.out_dir)
    {
        cfg_ = opts.config_path.empty() ? parse_config_text("{}") : parse_config(opts.config_path);
        if (opts.seed)
            cfg_.scenario.seed = *opts.seed;
        fs::create_directories(out_);
    }

    RunConfig& config() { return cfg_; }

    std::vector<Scheme> schemes(const std::vector<std::string>& names) const
    {
        if (names.empty())
            return {cfg_.scenario.scheme};
        std::vector<Scheme> out;
        for (const auto& n : names)
            out.push_back(parse_scheme(n));
        return out;
    }

    void emit(const std::string& name, const std::string& content)
    {
        const fs::path p = out_ / name;
        write_file_atomic(p, content);
        outputs_.push_back(p.string());
    }

    void finish()
    {
        const json manifest{
            {"tool", "coalsec"},
            {"version", COALSEC_VERSION},
            {"command", command_},
            {"seed", cfg_.scenario.seed},
            {"config", config_to_json(cfg_)},
            {"started_at", started_},
            {"finished_at", utc_now()},
            {"outputs", outputs_},
        };
        write_file_atomic(out_ / (command_ + "_manifest.json"), manifest.dump(2) + "\n");
    }

private:
    std::string command_;
    std::string started_;
    fs::path out_;
    RunConfig cfg_;
    std::vector<std::string> outputs_;
};

std::string trace_text(const FormationTrace& trace)
{
    std::ostringstream os;
    write_trace_jsonl(os, trace);
    return os.str();
}

SweepRow single_row(const std::string& param, double value, Scheme scheme,
                    const MetricsRecord& m)
{
    return summarize(param, value, scheme, {m});
}

int cmd_run(const CommonOptions& opts)
{
    Session session("run", opts);
    ScenarioConfig cfg = session.config().scenario;
    const NetworkState state = deploy_random(cfg);
    std::vector<SweepRow> rows;
    json results = json::array();
    for (Scheme scheme : session.schemes(opts.protocols)) {
        cfg.scheme = scheme;
        const DeploymentOutcome outcome = evaluate_deployment(state, cfg);
        rows.push_back(single_row("n", static_cast<double>(cfg.num_users), scheme, outcome.metrics));
        results.push_back({{"protocol", to_string(scheme)},
                           {"partition", partition_to_json(outcome.partition)},
                           {"per_user_payoffs", outcome.metrics.per_user_payoffs}});
        if (opts.trace && scheme != Scheme::noncoop)
            session.emit(std::string("trace_") + to_string(scheme) + ".jsonl",
                         trace_text(outcome.trace));
        std::cout << to_string(scheme) << ": avg_secrecy_rate "
                  << format_number(outcome.metrics.avg_secrecy_rate_per_user) << ", coalitions "
                  << outcome.metrics.num_coalitions << ", merges " << outcome.metrics.merge_events
                  << ", splits " << outcome.metrics.split_events << '\n';
    }
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    session.emit("run.csv", csv.str());
    const json saved{{"config", config_to_json(session.config())},
                     {"state", state_to_json(state)},
                     {"formation",
                      {{"max_merge_set", cfg.formation.max_merge_set},
                       {"max_coalition_size", cfg.formation.max_coalition_size},
                       {"max_rounds", cfg.formation.max_rounds}}},
                     {"results", results}};
    session.emit("run_state.json", saved.dump(2) + "\n");
    session.finish();
    return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& param,
              const std::vector<double>& values)
{
    Session session("sweep", opts);
    std::vector<std::string> names = opts.protocols;
    if (names.empty())
        names = {"df", "af", "noncoop"};
    const auto rows = sweep(parse_sweep_parameter(param), values, session.config().scenario,
                            session.schemes(names), session.config().mobility, opts.jobs);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    session.emit("sweep.csv", csv.str());
    session.finish();
    std::cout << csv.str();
    return 0;
}

int cmd_mobility(const CommonOptions& opts, std::optional<double> speed,
                 const std::string& model, const std::string& movers)
{
    Session session("mobility", opts);
    RunConfig& cfg = session.config();
    if (speed)
        cfg.mobility.speed_kmh = *speed;
    if (!model.empty())
        cfg.mobility.model = parse_mobility_model(model);
    if (!movers.empty())
        cfg.mobility.movers = parse_mover_role(movers);
    if (cfg.mobility.model == MobilityModel::stationary && cfg.mobility.speed_kmh > 0.0)
        cfg.mobility.model = MobilityModel::random_walk;
    cfg.mobility.validate();

    std::vector<SweepRow> rows;
    for (Scheme scheme : session.schemes(opts.protocols)) {
        ScenarioConfig scenario = cfg.scenario;
        scenario.scheme = scheme;
        const MobileRun run = run_mobile(scenario, cfg.mobility);
        rows.push_back(single_row("speed", cfg.mobility.speed_kmh, scheme, run.summary));
        std::ostringstream ts;
        write_timeseries_csv(ts, run);
        session.emit(std::string("mobility_") + to_string(scheme) + ".csv", ts.str());
        if (opts.trace && scheme != Scheme::noncoop)
            session.emit(std::string("trace_") + to_string(scheme) + ".jsonl", trace_text(run.trace));
    }
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    session.emit("mobility_summary.csv", csv.str());
    session.finish();
    std::cout << csv.str();
    return 0;
}

int cmd_verify(const std::string& path, const std::vector<std::string>& protocols)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    json saved;
    try {
        saved = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    const NetworkState state = state_from_json(saved.at("state"));
    FormationConfig formation;
    if (saved.contains("formation")) {
        const json& f = saved.at("formation");
        formation.max_merge_set = f.at("max_merge_set").get<std::size_t>();
        formation.max_coalition_size = f.at("max_coalition_size").get<std::size_t>();
        formation.max_rounds = f.at("max_rounds").get<std::size_t>();
    }
    for (const auto& result : saved.at("results")) {
        const Scheme scheme = parse_scheme(result.at("protocol").get<std::string>());
        if (!protocols.empty() &&
            std::find(protocols.begin(), protocols.end(), to_string(scheme)) == protocols.end())
            continue;
        const Partition partition = partition_from_json(result.at("partition"), state.num_users());
        std::cout << "protocol: " << to_string(scheme) << '\n';
        if (scheme == Scheme::noncoop) {
            std::cout << "dhp_stable: n/a\n";
            continue;
        }
        formation.protocol = scheme == Scheme::af ? Protocol::af : Protocol::df;
        const DhpReport report = is_dhp_stable(partition, formation, state);
        std::cout << "dhp_stable: " << (report.stable ? "true" : "false") << '\n';
        if (report.witness)
            std::cout << "witness: " << to_string(*report.witness) << '\n';
        if (state.num_users() <= 10)
            std::cout << "dc_stable: "
                      << (check_dc_partition(partition, state, formation.protocol) ? "true"
                                                                                   : "false")
                      << '\n';
        else
            std::cout << "dc_stable: skipped (more than 10 users)\n";
    }
    return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool protocols, bool trace, bool jobs)
{
    cmd->add_option("--config", opts.config_path, "JSON scenario config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "base seed (overrides the config)");
    cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    if (protocols)
        cmd->add_option("--protocols", opts.protocols, "comma list of df, af, noncoop")
            ->delimiter(',');
    if (trace)
        cmd->add_flag("--trace", opts.trace, "write merge/split event logs (JSONL)");
    if (jobs)
        cmd->add_option("--jobs", opts.jobs, "worker threads for replicates")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coalition formation for physical-layer security"};
    app.set_version_flag("--version", COALSEC_VERSION);
    app.require_subcommand(1);

    CommonOptions run_opts, sweep_opts, mob_opts;

    auto* run = app.add_subcommand("run", "form coalitions in one random deployment");
    add_common(run, run_opts, true, true, false);

    auto* sw = app.add_subcommand("sweep", "average metrics over deployments for a parameter sweep");
    add_common(sw, sweep_opts, true, false, true);
    std::string param;
    std::vector<double> values;
    sw->add_option("--param", param, "n, k, nu0_db or speed")
        ->required()
        ->check(CLI::IsMember({"n", "k", "nu0_db", "speed"}));
    sw->add_option("--values", values, "comma list of parameter values")
        ->required()
        ->delimiter(',');

    auto* mob = app.add_subcommand("mobility", "periodic re-formation with moving nodes");
    add_common(mob, mob_opts, true, true, false);
    std::optional<double> speed;
    std::string model, movers;
    mob->add_option("--speed", speed, "speed in km/h (overrides the config)");
    mob->add_option("--model", model, "static, random_walk or linear")
        ->check(CLI::IsMember({"static", "random_walk", "linear"}));
    mob->add_option("--movers", movers, "users, eavesdroppers or all")
        ->check(CLI::IsMember({"users", "eavesdroppers", "all"}));

    auto* verify = app.add_subcommand("verify", "check stability of partitions saved by run");
    std::string state_path;
    std::vector<std::string> verify_protocols;
    verify->add_option("state", state_path, "run_state.json written by run")
        ->required()
        ->check(CLI::ExistingFile);
    verify->add_option("--protocols", verify_protocols, "restrict to these protocols")
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_opts);
        if (sw->parsed())
            return cmd_sweep(sweep_opts, param, values);
        if (mob->parsed())
            return cmd_mobility(mob_opts, speed, model, movers);
        if (verify->parsed())
            return cmd_verify(state_path, verify_protocols);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
