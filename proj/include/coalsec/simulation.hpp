#pragma once

// Random deployments, mobility, periodic re-formation and parameter sweeps.

#include "coalsec/formation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coalsec {

enum class Scheme { noncoop, df, af };

const char* to_string(Scheme s);
/// Accepts "noncoop", "df", "af"; throws ValidationError otherwise.
Scheme parse_scheme(const std::string& name);

struct ScenarioConfig
{
    double area_side_m = 2500.0;
    std::size_t num_users = 45;
    std::size_t num_destinations = 2;
    std::size_t num_eavesdroppers = 2;
    RadioParams radio;
    Scheme scheme = Scheme::df;
    std::uint64_t seed = 1;
    std::size_t num_deployments = 100;
    FormationConfig formation;

    void validate() const;
};

enum class MobilityModel { stationary, random_walk, linear };
enum class MoverRole { users, eavesdroppers, all };

const char* to_string(MobilityModel m);
MobilityModel parse_mobility_model(const std::string& name);
const char* to_string(MoverRole r);
MoverRole parse_mover_role(const std::string& name);

struct MobilityConfig
{
    MobilityModel model = MobilityModel::stationary;
    double speed_kmh = 0.0;
    double decision_interval_s = 30.0;
    Vec2 direction{1.0, 0.0};
    double reformation_period_s = 30.0;
    double duration_s = 300.0;
    MoverRole movers = MoverRole::users;
    /// When non-empty, only these users move (movers must include users).
    std::vector<UserId> moving_users;

    void validate() const;
};

struct MetricsRecord
{
    double avg_secrecy_rate_per_user = 0.0;
    double avg_coalition_size = 0.0;
    /// Largest coalition; averaged when records are aggregated.
    double avg_max_coalition_size = 0.0;
    double merges_per_min = 0.0;
    double splits_per_min = 0.0;
    std::size_t num_coalitions = 0;
    std::size_t merge_events = 0;
    std::size_t split_events = 0;
    std::vector<double> per_user_payoffs;
};

/// Uniform placement over the square, reproducible from cfg.seed. Nodes
/// closer than 1 m to an earlier node are redrawn. Users are assigned to
/// their closest destination.
NetworkState deploy_random(const ScenarioConfig& cfg);

/// Per-user payoffs and coalition statistics of a partition. Throws
/// std::logic_error if some user ends with a -infinity payoff.
MetricsRecord partition_metrics(const Partition& partition, Scheme scheme,
                                const NetworkState& state);

struct DeploymentOutcome
{
    MetricsRecord metrics;
    Partition partition;
    FormationTrace trace;
};

/// Runs formation from all singletons (none for noncoop) and measures the
/// terminal partition.
DeploymentOutcome evaluate_deployment(const NetworkState& state, const ScenarioConfig& cfg);

struct MobileSnapshot
{
    double time_s = 0.0;
    Partition partition;
    MetricsRecord metrics;
    std::size_t merges = 0;
    std::size_t splits = 0;
    /// Coalitions dissolved because movement pushed a member out of range.
    std::size_t dissolved = 0;
};

struct MobileRun
{
    std::vector<MobileSnapshot> snapshots;
    FormationTrace trace;
    NetworkState final_state;
    /// Time-averaged metrics; event rates exclude the formation at t = 0.
    MetricsRecord summary;
};

/// Deploys from cfg, then moves nodes and re-forms every
/// reformation_period_s starting from the current partition.
MobileRun run_mobile(const ScenarioConfig& cfg, const MobilityConfig& mobility);

/// Same, from a given initial network.
MobileRun run_mobile(NetworkState state, const ScenarioConfig& cfg,
                     const MobilityConfig& mobility);

enum class SweepParameter { num_users, num_eavesdroppers, nu0_db, speed_kmh };

const char* to_string(SweepParameter p);
/// Accepts "n", "k", "nu0_db", "speed".
SweepParameter parse_sweep_parameter(const std::string& name);

struct SweepRow
{
    std::string param;
    double value = 0.0;
    Scheme scheme = Scheme::df;
    std::size_t seed_count = 0;
    double avg_secrecy_rate = 0.0;
    double stderr_secrecy_rate = 0.0;
    double avg_coalition_size = 0.0;
    double avg_max_coalition_size = 0.0;
    double merges_per_min = 0.0;
    double splits_per_min = 0.0;
};

/// Seed of replicate `index` for one sweep point.
std::uint64_t replicate_seed(std::uint64_t base_seed, double value, std::size_t index);

ScenarioConfig apply_parameter(ScenarioConfig cfg, SweepParameter p, double value);

/// One row per (value, scheme), averaged over base.num_deployments
/// deployments. All schemes see the same deployments. Replicates run on
/// up to `jobs` threads; results do not depend on `jobs`.
std::vector<SweepRow> sweep(SweepParameter p, const std::vector<double>& values,
                            const ScenarioConfig& base, const std::vector<Scheme>& schemes,
                            const MobilityConfig& mobility = {}, std::size_t jobs = 1);

/// Aggregates per-replicate records into one row.
SweepRow summarize(const std::string& param, double value, Scheme scheme,
                   const std::vector<MetricsRecord>& records);

} // namespace coalsec
