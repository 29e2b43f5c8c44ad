#pragma once

// Merge-and-split coalition formation: neighbor discovery, merge passes,
// split passes and their alternation until no Pareto-preferred move remains.

#include "coalsec/game.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace coalsec {

struct FormationConfig
{
    Protocol protocol = Protocol::df;
    /// Largest number of coalitions fused in one merge, initiator included.
    std::size_t max_merge_set = 4;
    std::size_t max_coalition_size = 12;
    std::size_t max_rounds = 1000;

    void validate(std::size_t num_eavesdroppers) const;
};

enum class EventKind { merge, split };

const char* to_string(EventKind kind);

struct FormationEvent
{
    EventKind kind = EventKind::merge;
    std::size_t round = 0;
    double time_s = 0.0;
    std::vector<Coalition> before;
    std::vector<Coalition> after;
    PayoffVector payoffs_before;
    PayoffVector payoffs_after;
};

struct FormationTrace
{
    std::vector<FormationEvent> events;

    std::size_t merges() const;
    std::size_t splits() const;
    bool empty() const { return events.empty(); }
    void append(const FormationTrace& other);
};

/// Applies the events in order; throws ValidationError if an event does not
/// match the partition it is applied to.
Partition replay(const Partition& initial, const FormationTrace& trace);

/// Lazily evaluated payoffs keyed by coalition, valid for one network
/// snapshot and protocol. Not thread-safe; one cache per formation run.
class PayoffCache
{
public:
    PayoffCache(const NetworkState& state, Protocol protocol);

    const NetworkState& state() const { return *state_; }
    Protocol protocol() const { return protocol_; }

    /// Payoff of the member at position `index` of s.
    Payoff payoff(const Coalition& s, std::size_t index);
    std::vector<Payoff> payoffs(const Coalition& s);
    PayoffVector value(const Coalition& s);

    /// True if every member of s does at least as well as `incumbent`
    /// (aligned with s), and at least one strictly better. Stops at the
    /// first member that would lose.
    bool improves_on(const Coalition& s, std::span<const Payoff> incumbent);

    std::size_t evaluations() const { return evaluations_; }

private:
    struct Entry
    {
        std::vector<std::optional<Payoff>> values;
    };
    Payoff lookup(const Coalition& s, Entry& entry, std::size_t index);

    const NetworkState* state_;
    Protocol protocol_;
    ChannelTable channels_;
    std::unordered_map<Coalition, Entry, CoalitionHash> entries_;
    std::size_t evaluations_ = 0;
};

/// True if every pair of users in the union is within discovery range.
bool exchange_feasible(std::span<const UserId> members, const NetworkState& state);

/// Candidate merge partners of every coalition: B is a candidate for A when
/// all pairs inside A u B are within discovery range.
std::map<Coalition, std::vector<Coalition>> discover_neighbors(const Partition& partition,
                                                               const NetworkState& state);

struct FormationResult
{
    Partition partition;
    FormationTrace trace;
    std::size_t rounds = 0;
};

FormationResult merge_pass(const Partition& partition, const FormationConfig& cfg,
                           const NetworkState& state);
FormationResult split_pass(const Partition& partition, const FormationConfig& cfg,
                           const NetworkState& state);

/// Alternates merge and split passes until a full round changes nothing.
/// Events are stamped with `time_s`. Throws RoundCapExceeded after
/// cfg.max_rounds rounds.
FormationResult run_formation(const Partition& initial, const FormationConfig& cfg,
                              const NetworkState& state, double time_s = 0.0);

namespace detail {

FormationResult merge_pass(const Partition& partition, const FormationConfig& cfg,
                           PayoffCache& cache, std::size_t round, double time_s);
FormationResult split_pass(const Partition& partition, const FormationConfig& cfg,
                           PayoffCache& cache, std::size_t round, double time_s);

} // namespace detail

} // namespace coalsec
