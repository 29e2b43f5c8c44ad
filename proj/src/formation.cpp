#include "coalsec/formation.hpp"

#include "coalsec/error.hpp"
#include "coalsec/set_partitions.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace coalsec {

void FormationConfig::validate(std::size_t num_eavesdroppers) const
{
    if (max_merge_set < 2)
        throw ValidationError("max_merge_set must be at least 2");
    if (max_coalition_size <= num_eavesdroppers)
        throw ValidationError("max_coalition_size must exceed the number of eavesdroppers");
    if (max_rounds == 0)
        throw ValidationError("max_rounds must be positive");
}

const char* to_string(EventKind kind)
{
    return kind == EventKind::merge ? "merge" : "split";
}

std::size_t FormationTrace::merges() const
{
    return static_cast<std::size_t>(std::count_if(
        events.begin(), events.end(), [](const auto& e) { return e.kind == EventKind::merge; }));
}

std::size_t FormationTrace::splits() const
{
    return events.size() - merges();
}

void FormationTrace::append(const FormationTrace& other)
{
    events.insert(events.end(), other.events.begin(), other.events.end());
}

Partition replay(const Partition& initial, const FormationTrace& trace)
{
    std::vector<Coalition> blocks = initial.blocks();
    for (const auto& e : trace.events) {
        for (const auto& gone : e.before) {
            auto it = std::find(blocks.begin(), blocks.end(), gone);
            if (it == blocks.end())
                throw ValidationError("trace event refers to missing coalition " +
                                      to_string(gone));
            blocks.erase(it);
        }
        blocks.insert(blocks.end(), e.after.begin(), e.after.end());
    }
    return Partition(std::move(blocks), initial.num_users());
}

PayoffCache::PayoffCache(const NetworkState& state, Protocol protocol)
    : state_(&state), protocol_(protocol), channels_(state)
{
}

Payoff PayoffCache::lookup(const Coalition& s, Entry& entry, std::size_t index)
{
    auto& slot = entry.values[index];
    if (!slot) {
        slot = coalition_payoff(s.members()[index], s.span(), protocol_, channels_);
        ++evaluations_;
    }
    return *slot;
}

Payoff PayoffCache::payoff(const Coalition& s, std::size_t index)
{
    auto [it, inserted] = entries_.try_emplace(s);
    if (inserted)
        it->second.values.resize(s.size());
    return lookup(s, it->second, index);
}

std::vector<Payoff> PayoffCache::payoffs(const Coalition& s)
{
    auto [it, inserted] = entries_.try_emplace(s);
    if (inserted)
        it->second.values.resize(s.size());
    std::vector<Payoff> out(s.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        out[k] = lookup(s, it->second, k);
    return out;
}

PayoffVector PayoffCache::value(const Coalition& s)
{
    const auto p = payoffs(s);
    std::vector<std::pair<UserId, Payoff>> entries;
    entries.reserve(s.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        entries.emplace_back(s.members()[k], p[k]);
    return PayoffVector(std::move(entries));
}

bool PayoffCache::improves_on(const Coalition& s, std::span<const Payoff> incumbent)
{
    auto [it, inserted] = entries_.try_emplace(s);
    if (inserted)
        it->second.values.resize(s.size());
    bool strict = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const Payoff p = lookup(s, it->second, k);
        if (p < incumbent[k])
            return false;
        strict = strict || p > incumbent[k];
    }
    return strict;
}

bool exchange_feasible(std::span<const UserId> members, const NetworkState& state)
{
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
            if (!within_discovery(state.user_positions.at(members[a]),
                                  state.user_positions.at(members[b]), state.radio))
                return false;
    return true;
}

namespace {

// Discovery-range adjacency between users of one snapshot.
class ProximityMatrix
{
public:
    explicit ProximityMatrix(const NetworkState& state) : n_(state.num_users()), near_(n_ * n_, 0)
    {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) {
                const bool ok = within_discovery(state.user_positions[i],
                                                 state.user_positions[j], state.radio);
                near_[i * n_ + j] = near_[j * n_ + i] = ok;
            }
    }

    bool near(UserId i, UserId j) const { return near_[i * n_ + j] != 0; }

    bool internal(const Coalition& a) const
    {
        const auto& m = a.members();
        for (std::size_t x = 0; x < m.size(); ++x)
            for (std::size_t y = x + 1; y < m.size(); ++y)
                if (!near(m[x], m[y]))
                    return false;
        return true;
    }

    bool cross(const Coalition& a, const Coalition& b) const
    {
        for (UserId i : a.members())
            for (UserId j : b.members())
                if (!near(i, j))
                    return false;
        return true;
    }

private:
    std::size_t n_;
    std::vector<char> near_;
};

std::vector<Payoff> gather(std::span<const Payoff> by_user, const Coalition& s)
{
    std::vector<Payoff> out;
    out.reserve(s.size());
    for (UserId u : s.members())
        out.push_back(by_user[u]);
    return out;
}

PayoffVector gather_vector(std::span<const Payoff> by_user, std::span<const Coalition> parts)
{
    std::vector<std::pair<UserId, Payoff>> entries;
    for (const auto& c : parts)
        for (UserId u : c.members())
            entries.emplace_back(u, by_user[u]);
    return PayoffVector(std::move(entries));
}

std::vector<Payoff> payoffs_by_user(const Partition& partition, PayoffCache& cache)
{
    std::vector<Payoff> out(partition.num_users());
    for (const auto& block : partition.blocks()) {
        const auto p = cache.payoffs(block);
        for (std::size_t k = 0; k < block.size(); ++k)
            out[block.members()[k]] = p[k];
    }
    return out;
}

void check_partition(const Partition& partition, const NetworkState& state)
{
    if (partition.num_users() != state.num_users())
        throw ValidationError("partition does not match the number of users");
    for (const auto& b : partition.blocks())
        if (!legal_coalition_size(b.size(), state.num_eavesdroppers()))
            throw InvalidCoalitionSize("coalition " + to_string(b) + " cannot null " +
                                       std::to_string(state.num_eavesdroppers()) +
                                       " eavesdroppers");
}

struct MergeCandidate
{
    std::vector<std::size_t> picks; // indices into the sorted neighbor list
    std::size_t merged_size = 0;
};

} // namespace

std::map<Coalition, std::vector<Coalition>> discover_neighbors(const Partition& partition,
                                                               const NetworkState& state)
{
    const ProximityMatrix proximity(state);
    std::map<Coalition, std::vector<Coalition>> out;
    const auto& blocks = partition.blocks();
    for (std::size_t a = 0; a < blocks.size(); ++a) {
        auto& list = out[blocks[a]];
        if (!proximity.internal(blocks[a]))
            continue;
        for (std::size_t b = 0; b < blocks.size(); ++b)
            if (b != a && proximity.internal(blocks[b]) && proximity.cross(blocks[a], blocks[b]))
                list.push_back(blocks[b]);
    }
    return out;
}

namespace detail {

FormationResult merge_pass(const Partition& partition, const FormationConfig& cfg,
                           PayoffCache& cache, std::size_t round, double time_s)
{
    const NetworkState& state = cache.state();
    const std::size_t k = state.num_eavesdroppers();
    const ProximityMatrix proximity(state);

    std::vector<Coalition> blocks = partition.blocks();
    std::vector<char> alive(blocks.size(), 1);
    std::vector<char> internal_ok(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b)
        internal_ok[b] = proximity.internal(blocks[b]);
    std::vector<Payoff> current = payoffs_by_user(partition, cache);

    FormationResult result;
    for (std::size_t idx = 0; idx < blocks.size(); ++idx) {
        if (!alive[idx] || !internal_ok[idx])
            continue;
        for (;;) {
            std::vector<std::size_t> neighbors;
            for (std::size_t j = 0; j < blocks.size(); ++j)
                if (j != idx && alive[j] && internal_ok[j] &&
                    proximity.cross(blocks[idx], blocks[j]))
                    neighbors.push_back(j);
            std::sort(neighbors.begin(), neighbors.end(), [&](std::size_t a, std::size_t b) {
                return blocks[a].smallest() < blocks[b].smallest();
            });

            const std::size_t n = neighbors.size();
            std::vector<char> pair_ok(n * n, 0);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b)
                    pair_ok[a * n + b] = pair_ok[b * n + a] =
                        proximity.cross(blocks[neighbors[a]], blocks[neighbors[b]]);

            bool merged = false;
            const std::size_t max_picks = std::min(cfg.max_merge_set - 1, n);
            for (std::size_t count = 1; count <= max_picks && !merged; ++count) {
                std::vector<MergeCandidate> candidates;
                std::vector<std::size_t> picks;
                // Depth-first over increasing index tuples whose members are
                // mutually within discovery range.
                auto extend = [&](auto&& self, std::size_t start, std::size_t size) -> void {
                    if (picks.size() == count) {
                        if (legal_coalition_size(size, k) && size <= cfg.max_coalition_size)
                            candidates.push_back({picks, size});
                        return;
                    }
                    for (std::size_t p = start; p < n; ++p) {
                        bool ok = true;
                        for (std::size_t q : picks)
                            ok = ok && pair_ok[q * n + p];
                        const std::size_t grown = size + blocks[neighbors[p]].size();
                        if (!ok || grown > cfg.max_coalition_size)
                            continue;
                        picks.push_back(p);
                        self(self, p + 1, grown);
                        picks.pop_back();
                    }
                };
                extend(extend, 0, blocks[idx].size());
                std::stable_sort(candidates.begin(), candidates.end(),
                                 [](const MergeCandidate& a, const MergeCandidate& b) {
                                     return a.merged_size < b.merged_size;
                                 });

                for (const auto& cand : candidates) {
                    std::vector<Coalition> parts{blocks[idx]};
                    for (std::size_t p : cand.picks)
                        parts.push_back(blocks[neighbors[p]]);
                    Coalition united = merge(parts);
                    if (!cache.improves_on(united, gather(current, united)))
                        continue;

                    FormationEvent event;
                    event.kind = EventKind::merge;
                    event.round = round;
                    event.time_s = time_s;
                    event.payoffs_before = gather_vector(current, parts);
                    event.payoffs_after = cache.value(united);
                    event.before = parts;
                    event.after = {united};
                    for (const auto& [u, p] : event.payoffs_after.entries())
                        current[u] = p;
                    for (std::size_t p : cand.picks)
                        alive[neighbors[p]] = 0;
                    blocks[idx] = std::move(united);
                    result.trace.events.push_back(std::move(event));
                    merged = true;
                    break;
                }
            }
            if (!merged)
                break;
        }
    }

    std::vector<Coalition> survivors;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (alive[b])
            survivors.push_back(std::move(blocks[b]));
    result.partition = Partition(std::move(survivors), partition.num_users());
    return result;
}

FormationResult split_pass(const Partition& partition, const FormationConfig& cfg,
                           PayoffCache& cache, std::size_t round, double time_s)
{
    (void)cfg;
    const std::size_t k = cache.state().num_eavesdroppers();
    std::deque<Coalition> queue(partition.blocks().begin(), partition.blocks().end());
    std::vector<Coalition> settled;
    FormationResult result;

    while (!queue.empty()) {
        Coalition whole = std::move(queue.front());
        queue.pop_front();
        const std::size_t n = whole.size();
        if (n == 1) {
            settled.push_back(std::move(whole));
            continue;
        }
        if (n > 24)
            throw ValidationError("coalition " + to_string(whole) + " too large to split-check");

        const std::vector<Payoff> incumbent = cache.payoffs(whole);

        // 0 unknown, 1 someone loses, 2 weakly better, 3 weakly better with a gain.
        std::vector<std::int8_t> verdict(std::size_t{1} << n, 0);
        auto judge = [&](std::uint64_t mask) -> std::int8_t {
            auto& v = verdict[mask];
            if (v)
                return v;
            std::vector<UserId> members;
            std::vector<std::size_t> positions;
            for (std::size_t b = 0; b < n; ++b)
                if (mask >> b & 1U) {
                    members.push_back(whole.members()[b]);
                    positions.push_back(b);
                }
            const Coalition part(std::move(members));
            bool gain = false;
            for (std::size_t q = 0; q < positions.size(); ++q) {
                const Payoff p = cache.payoff(part, q);
                if (p < incumbent[positions[q]])
                    return v = 1;
                gain = gain || p > incumbent[positions[q]];
            }
            return v = gain ? 3 : 2;
        };

        std::vector<std::uint64_t> chosen;
        for_each_restricted_partition(
            n, k + 1, 2, n, [&](std::span<const std::uint8_t> labels, std::size_t blocks) {
                const auto masks = block_masks(labels, blocks);
                bool gain = false;
                for (std::uint64_t m : masks) {
                    const auto v = judge(m);
                    if (v == 1)
                        return false;
                    gain = gain || v == 3;
                }
                if (gain)
                    chosen = masks;
                return gain;
            });

        if (chosen.empty()) {
            settled.push_back(std::move(whole));
            continue;
        }

        FormationEvent event;
        event.kind = EventKind::split;
        event.round = round;
        event.time_s = time_s;
        event.before = {whole};
        {
            std::vector<std::pair<UserId, Payoff>> entries;
            for (std::size_t q = 0; q < n; ++q)
                entries.emplace_back(whole.members()[q], incumbent[q]);
            event.payoffs_before = PayoffVector(std::move(entries));
        }
        std::vector<PayoffVector> after_values;
        for (std::uint64_t m : chosen) {
            std::vector<UserId> members;
            for (std::size_t b = 0; b < n; ++b)
                if (m >> b & 1U)
                    members.push_back(whole.members()[b]);
            event.after.emplace_back(std::move(members));
            after_values.push_back(cache.value(event.after.back()));
        }
        event.payoffs_after = PayoffVector::join(after_values);
        for (const auto& part : event.after)
            queue.push_back(part);
        result.trace.events.push_back(std::move(event));
    }

    result.partition = Partition(std::move(settled), partition.num_users());
    return result;
}

} // namespace detail

FormationResult merge_pass(const Partition& partition, const FormationConfig& cfg,
                           const NetworkState& state)
{
    cfg.validate(state.num_eavesdroppers());
    check_partition(partition, state);
    PayoffCache cache(state, cfg.protocol);
    return detail::merge_pass(partition, cfg, cache, 0, 0.0);
}

FormationResult split_pass(const Partition& partition, const FormationConfig& cfg,
                           const NetworkState& state)
{
    cfg.validate(state.num_eavesdroppers());
    check_partition(partition, state);
    PayoffCache cache(state, cfg.protocol);
    return detail::split_pass(partition, cfg, cache, 0, 0.0);
}

FormationResult run_formation(const Partition& initial, const FormationConfig& cfg,
                              const NetworkState& state, double time_s)
{
    cfg.validate(state.num_eavesdroppers());
    state.validate();
    check_partition(initial, state);

    PayoffCache cache(state, cfg.protocol);
    FormationResult result;
    result.partition = initial;
    for (std::size_t round = 0;; ++round) {
        if (round >= cfg.max_rounds)
            throw RoundCapExceeded("no convergence after " + std::to_string(cfg.max_rounds) +
                                   " merge-and-split rounds");
        auto merged = detail::merge_pass(result.partition, cfg, cache, round, time_s);
        auto split = detail::split_pass(merged.partition, cfg, cache, round, time_s);
        const bool quiet = merged.trace.empty() && split.trace.empty();
        result.trace.append(merged.trace);
        result.trace.append(split.trace);
        result.partition = std::move(split.partition);
        result.rounds = round + 1;
        if (quiet)
            return result;
    }
}

} // namespace coalsec
