#include "coalsec/simulation.hpp"

#include "coalsec/error.hpp"
#include "coalsec/random.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

namespace coalsec {

const char* to_string(Scheme s)
{
    switch (s) {
    case Scheme::noncoop: return "noncoop";
    case Scheme::df: return "df";
    case Scheme::af: return "af";
    }
    return "?";
}

Scheme parse_scheme(const std::string& name)
{
    if (name == "noncoop")
        return Scheme::noncoop;
    if (name == "df")
        return Scheme::df;
    if (name == "af")
        return Scheme::af;
    throw ValidationError("unknown protocol '" + name + "' (expected df, af or noncoop)");
}

void ScenarioConfig::validate() const
{
    if (num_users < 1)
        throw ValidationError("N must be at least 1");
    if (num_destinations < 1)
        throw ValidationError("M must be at least 1");
    if (num_eavesdroppers < 1)
        throw ValidationError("K must be at least 1");
    if (!(area_side_m > 0.0) || !std::isfinite(area_side_m))
        throw ValidationError("area_side_m must be > 0");
    if (num_deployments < 1)
        throw ValidationError("num_deployments must be at least 1");
    radio.validate();
    formation.validate(num_eavesdroppers);
}

const char* to_string(MobilityModel m)
{
    switch (m) {
    case MobilityModel::stationary: return "static";
    case MobilityModel::random_walk: return "random_walk";
    case MobilityModel::linear: return "linear";
    }
    return "?";
}

MobilityModel parse_mobility_model(const std::string& name)
{
    if (name == "static")
        return MobilityModel::stationary;
    if (name == "random_walk")
        return MobilityModel::random_walk;
    if (name == "linear")
        return MobilityModel::linear;
    throw ValidationError("unknown mobility model '" + name + "'");
}

const char* to_string(MoverRole r)
{
    switch (r) {
    case MoverRole::users: return "users";
    case MoverRole::eavesdroppers: return "eavesdroppers";
    case MoverRole::all: return "all";
    }
    return "?";
}

MoverRole parse_mover_role(const std::string& name)
{
    if (name == "users")
        return MoverRole::users;
    if (name == "eavesdroppers")
        return MoverRole::eavesdroppers;
    if (name == "all")
        return MoverRole::all;
    throw ValidationError("unknown mover role '" + name + "'");
}

void MobilityConfig::validate() const
{
    if (!(speed_kmh >= 0.0) || !std::isfinite(speed_kmh))
        throw ValidationError("speed_kmh must be >= 0");
    if (!(decision_interval_s > 0.0))
        throw ValidationError("decision_interval_s must be > 0");
    if (!(reformation_period_s > 0.0))
        throw ValidationError("reformation_period_s must be > 0");
    if (!(duration_s >= 0.0))
        throw ValidationError("duration_s must be >= 0");
    if (model == MobilityModel::linear && std::hypot(direction.x, direction.y) == 0.0)
        throw ValidationError("linear mobility needs a non-zero direction");
    if (!moving_users.empty() && movers == MoverRole::eavesdroppers)
        throw ValidationError("moving_users requires movers to include users");
}

NetworkState deploy_random(const ScenarioConfig& cfg)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> coord(0.0, cfg.area_side_m);
    std::vector<Vec2> placed;
    auto draw = [&] {
        for (;;) {
            const Vec2 p{coord(rng), coord(rng)};
            const bool clear = std::none_of(placed.begin(), placed.end(),
                                            [&](Vec2 q) { return distance(p, q) < 1.0; });
            if (clear) {
                placed.push_back(p);
                return p;
            }
        }
    };

    NetworkState state;
    state.radio = cfg.radio;
    for (std::size_t i = 0; i < cfg.num_users; ++i)
        state.user_positions.push_back(draw());
    for (std::size_t m = 0; m < cfg.num_destinations; ++m)
        state.destination_positions.push_back(draw());
    for (std::size_t k = 0; k < cfg.num_eavesdroppers; ++k)
        state.eavesdropper_positions.push_back(draw());
    state.assignment = assign_closest_destination(state);
    return state;
}

namespace {

Protocol protocol_of(Scheme s)
{
    return s == Scheme::af ? Protocol::af : Protocol::df;
}

FormationConfig formation_for(const ScenarioConfig& cfg)
{
    FormationConfig f = cfg.formation;
    f.protocol = protocol_of(cfg.scheme);
    return f;
}

} // namespace

MetricsRecord partition_metrics(const Partition& partition, Scheme scheme,
                                const NetworkState& state)
{
    MetricsRecord m;
    m.per_user_payoffs.assign(state.num_users(), 0.0);
    const Protocol protocol = protocol_of(scheme);
    std::size_t largest = 0;
    for (const auto& block : partition.blocks()) {
        if (scheme == Scheme::noncoop && block.size() > 1)
            throw std::logic_error("non-cooperative partition with a coalition");
        const PayoffVector value = coalition_value(block, protocol, state);
        for (const auto& [u, p] : value.entries()) {
            if (p.is_negative_infinity())
                throw std::logic_error("terminal partition gives user " + std::to_string(u) +
                                       " a -infinity payoff");
            m.per_user_payoffs[u] = p.value();
        }
        largest = std::max(largest, block.size());
    }
    double total = 0.0;
    for (double p : m.per_user_payoffs)
        total += p;
    const auto n = static_cast<double>(state.num_users());
    m.avg_secrecy_rate_per_user = n > 0 ? total / n : 0.0;
    m.num_coalitions = partition.size();
    m.avg_coalition_size = partition.size() ? n / static_cast<double>(partition.size()) : 0.0;
    m.avg_max_coalition_size = static_cast<double>(largest);
    return m;
}

DeploymentOutcome evaluate_deployment(const NetworkState& state, const ScenarioConfig& cfg)
{
    DeploymentOutcome out;
    const Partition start = Partition::singletons(state.num_users());
    if (cfg.scheme == Scheme::noncoop) {
        out.partition = start;
    } else {
        auto formed = run_formation(start, formation_for(cfg), state);
        out.partition = std::move(formed.partition);
        out.trace = std::move(formed.trace);
    }
    out.metrics = partition_metrics(out.partition, cfg.scheme, state);
    out.metrics.merge_events = out.trace.merges();
    out.metrics.split_events = out.trace.splits();
    return out;
}

namespace {

// Straight-line movement with specular reflection at the square's edges.
struct Walker
{
    Vec2* position = nullptr;
    double heading = 0.0;
    double next_turn_s = 0.0;
};

void reflect_move(Vec2& p, double& heading, double length, double side)
{
    double vx = std::cos(heading), vy = std::sin(heading);
    double x = p.x + vx * length, y = p.y + vy * length;
    auto fold = [side](double& c, double& v) {
        for (int guard = 0; guard < 64 && (c < 0.0 || c > side); ++guard) {
            c = c < 0.0 ? -c : 2.0 * side - c;
            v = -v;
        }
        c = std::clamp(c, 0.0, side);
    };
    fold(x, vx);
    fold(y, vy);
    p = {x, y};
    heading = std::atan2(vy, vx);
}

class MobilityDriver
{
public:
    MobilityDriver(NetworkState& state, const ScenarioConfig& cfg, const MobilityConfig& mob)
        : mob_(mob), side_(cfg.area_side_m), rng_(derive_seed({cfg.seed, 0x6d6f62696c65ULL}))
    {
        const double fixed_heading = std::atan2(mob.direction.y, mob.direction.x);
        auto add = [&](Vec2& p) {
            Walker w;
            w.position = &p;
            w.heading = mob.model == MobilityModel::linear ? fixed_heading : draw_heading();
            w.next_turn_s = mob.decision_interval_s;
            walkers_.push_back(w);
        };
        if (mob.model == MobilityModel::stationary)
            return;
        if (mob.movers != MoverRole::eavesdroppers) {
            if (mob.moving_users.empty()) {
                for (auto& p : state.user_positions)
                    add(p);
            } else {
                for (UserId u : mob.moving_users)
                    add(state.user_positions.at(u));
            }
        }
        if (mob.movers != MoverRole::users)
            for (auto& p : state.eavesdropper_positions)
                add(p);
    }

    void advance(double from_s, double to_s)
    {
        const double speed = mob_.speed_kmh / 3.6;
        for (auto& w : walkers_) {
            double t = from_s;
            while (t < to_s) {
                double until = to_s;
                if (mob_.model == MobilityModel::random_walk)
                    until = std::min(until, w.next_turn_s);
                reflect_move(*w.position, w.heading, speed * (until - t), side_);
                t = until;
                if (mob_.model == MobilityModel::random_walk && t >= w.next_turn_s) {
                    w.heading = draw_heading();
                    w.next_turn_s += mob_.decision_interval_s;
                }
            }
        }
    }

private:
    double draw_heading()
    {
        return std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng_);
    }

    MobilityConfig mob_;
    double side_;
    std::mt19937_64 rng_;
    std::vector<Walker> walkers_;
};

// Coalitions in which some member can no longer afford the exchange fall
// apart into singletons before the next formation round.
std::size_t dissolve_infeasible(Partition& partition, Scheme scheme, const NetworkState& state,
                                FormationTrace& trace, double time_s)
{
    std::vector<Coalition> blocks;
    std::size_t dissolved = 0;
    for (const auto& block : partition.blocks()) {
        if (block.size() == 1) {
            blocks.push_back(block);
            continue;
        }
        const auto value = coalition_value(block, protocol_of(scheme), state);
        if (!value.any_negative_infinity()) {
            blocks.push_back(block);
            continue;
        }
        ++dissolved;
        FormationEvent event;
        event.kind = EventKind::split;
        event.time_s = time_s;
        event.before = {block};
        event.payoffs_before = value;
        std::vector<PayoffVector> parts;
        for (UserId u : block.members()) {
            event.after.push_back(Coalition{u});
            parts.push_back(coalition_value(event.after.back(), protocol_of(scheme), state));
            blocks.push_back(event.after.back());
        }
        event.payoffs_after = PayoffVector::join(parts);
        trace.events.push_back(std::move(event));
    }
    partition = Partition(std::move(blocks), partition.num_users());
    return dissolved;
}

} // namespace

MobileRun run_mobile(const ScenarioConfig& cfg, const MobilityConfig& mobility)
{
    return run_mobile(deploy_random(cfg), cfg, mobility);
}

MobileRun run_mobile(NetworkState state, const ScenarioConfig& cfg,
                     const MobilityConfig& mobility)
{
    cfg.validate();
    mobility.validate();
    MobileRun run;
    MobilityDriver driver(state, cfg, mobility);
    const FormationConfig formation = formation_for(cfg);
    Partition partition = Partition::singletons(state.num_users());

    double rate_sum = 0.0, size_sum = 0.0, max_sum = 0.0;
    std::size_t later_merges = 0, later_splits = 0;
    double previous = 0.0;
    const auto steps = static_cast<std::size_t>(
        std::floor(mobility.duration_s / mobility.reformation_period_s + 1e-9));
    for (std::size_t step = 0; step <= steps; ++step) {
        const double t = static_cast<double>(step) * mobility.reformation_period_s;
        if (step > 0) {
            driver.advance(previous, t);
            state.assignment = assign_closest_destination(state);
        }
        previous = t;

        MobileSnapshot snap;
        snap.time_s = t;
        FormationTrace step_trace;
        if (cfg.scheme != Scheme::noncoop) {
            snap.dissolved = dissolve_infeasible(partition, cfg.scheme, state, step_trace, t);
            auto formed = run_formation(partition, formation, state, t);
            partition = std::move(formed.partition);
            step_trace.append(formed.trace);
        }
        snap.partition = partition;
        snap.metrics = partition_metrics(partition, cfg.scheme, state);
        snap.merges = step_trace.merges();
        snap.splits = step_trace.splits();
        snap.metrics.merge_events = snap.merges;
        snap.metrics.split_events = snap.splits;
        if (step > 0) {
            later_merges += snap.merges;
            later_splits += snap.splits;
        }
        rate_sum += snap.metrics.avg_secrecy_rate_per_user;
        size_sum += snap.metrics.avg_coalition_size;
        max_sum += snap.metrics.avg_max_coalition_size;
        run.trace.append(step_trace);
        run.snapshots.push_back(std::move(snap));
    }

    const auto count = static_cast<double>(run.snapshots.size());
    run.summary = run.snapshots.back().metrics;
    run.summary.avg_secrecy_rate_per_user = rate_sum / count;
    run.summary.avg_coalition_size = size_sum / count;
    run.summary.avg_max_coalition_size = max_sum / count;
    run.summary.merge_events = later_merges;
    run.summary.split_events = later_splits;
    const double minutes = mobility.duration_s / 60.0;
    run.summary.merges_per_min = minutes > 0 ? static_cast<double>(later_merges) / minutes : 0.0;
    run.summary.splits_per_min = minutes > 0 ? static_cast<double>(later_splits) / minutes : 0.0;
    run.final_state = std::move(state);
    return run;
}

const char* to_string(SweepParameter p)
{
    switch (p) {
    case SweepParameter::num_users: return "n";
    case SweepParameter::num_eavesdroppers: return "k";
    case SweepParameter::nu0_db: return "nu0_db";
    case SweepParameter::speed_kmh: return "speed";
    }
    return "?";
}

SweepParameter parse_sweep_parameter(const std::string& name)
{
    if (name == "n")
        return SweepParameter::num_users;
    if (name == "k")
        return SweepParameter::num_eavesdroppers;
    if (name == "nu0_db")
        return SweepParameter::nu0_db;
    if (name == "speed")
        return SweepParameter::speed_kmh;
    throw ValidationError("unknown sweep parameter '" + name + "' (expected n, k, nu0_db, speed)");
}

std::uint64_t replicate_seed(std::uint64_t base_seed, double value, std::size_t index)
{
    return derive_seed({base_seed, std::bit_cast<std::uint64_t>(value), index});
}

ScenarioConfig apply_parameter(ScenarioConfig cfg, SweepParameter p, double value)
{
    auto as_count = [&](const char* what) {
        if (!(value >= 1.0) || value != std::floor(value))
            throw ValidationError(std::string(what) + " sweep values must be positive integers");
        return static_cast<std::size_t>(value);
    };
    switch (p) {
    case SweepParameter::num_users: cfg.num_users = as_count("N"); break;
    case SweepParameter::num_eavesdroppers:
        cfg.num_eavesdroppers = as_count("K");
        cfg.formation.max_coalition_size =
            std::max(cfg.formation.max_coalition_size, cfg.num_eavesdroppers + 1);
        break;
    case SweepParameter::nu0_db: cfg.radio.exchange_snr_linear = db_to_linear(value); break;
    case SweepParameter::speed_kmh: break;
    }
    return cfg;
}

SweepRow summarize(const std::string& param, double value, Scheme scheme,
                   const std::vector<MetricsRecord>& records)
{
    SweepRow row;
    row.param = param;
    row.value = value;
    row.scheme = scheme;
    row.seed_count = records.size();
    if (records.empty())
        return row;
    const auto n = static_cast<double>(records.size());
    for (const auto& r : records) {
        row.avg_secrecy_rate += r.avg_secrecy_rate_per_user;
        row.avg_coalition_size += r.avg_coalition_size;
        row.avg_max_coalition_size += r.avg_max_coalition_size;
        row.merges_per_min += r.merges_per_min;
        row.splits_per_min += r.splits_per_min;
    }
    row.avg_secrecy_rate /= n;
    row.avg_coalition_size /= n;
    row.avg_max_coalition_size /= n;
    row.merges_per_min /= n;
    row.splits_per_min /= n;
    if (records.size() > 1) {
        double ss = 0.0;
        for (const auto& r : records)
            ss += std::pow(r.avg_secrecy_rate_per_user - row.avg_secrecy_rate, 2);
        row.stderr_secrecy_rate = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return row;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace

std::vector<SweepRow> sweep(SweepParameter p, const std::vector<double>& values,
                            const ScenarioConfig& base, const std::vector<Scheme>& schemes,
                            const MobilityConfig& mobility, std::size_t jobs)
{
    base.validate();
    std::vector<SweepRow> rows;
    for (double value : values) {
        const ScenarioConfig point = apply_parameter(base, p, value);
        point.validate();
        MobilityConfig mob = mobility;
        if (p == SweepParameter::speed_kmh) {
            mob.speed_kmh = value;
            if (mob.model == MobilityModel::stationary)
                mob.model = MobilityModel::random_walk;
        }
        const std::size_t reps = point.num_deployments;
        // records[scheme][replicate]
        std::vector<std::vector<MetricsRecord>> records(schemes.size(),
                                                        std::vector<MetricsRecord>(reps));
        parallel_for(reps, jobs, [&](std::size_t r) {
            ScenarioConfig cfg = point;
            cfg.seed = replicate_seed(base.seed, value, r);
            const NetworkState state = deploy_random(cfg);
            for (std::size_t s = 0; s < schemes.size(); ++s) {
                cfg.scheme = schemes[s];
                records[s][r] = p == SweepParameter::speed_kmh
                                    ? run_mobile(state, cfg, mob).summary
                                    : evaluate_deployment(state, cfg).metrics;
            }
        });
        for (std::size_t s = 0; s < schemes.size(); ++s)
            rows.push_back(summarize(to_string(p), value, schemes[s], records[s]));
    }
    return rows;
}

} // namespace coalsec
