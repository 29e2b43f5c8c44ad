#include "coalsec/stability.hpp"

#include "coalsec/error.hpp"
#include "coalsec/set_partitions.hpp"

#include <bit>
#include <sstream>

namespace coalsec {

std::string to_string(const StabilityWitness& w)
{
    std::ostringstream os;
    os << to_string(w.kind) << ' ';
    for (std::size_t k = 0; k < w.before.size(); ++k)
        os << (k ? "+" : "") << to_string(w.before[k]);
    os << " -> ";
    for (std::size_t k = 0; k < w.after.size(); ++k)
        os << (k ? "+" : "") << to_string(w.after[k]);
    return os.str();
}

namespace {

constexpr std::size_t merge_budget = 2'000'000;

// Subset of `base` selected by the bits of `mask` (bit k = base[k]).
Coalition select(std::span<const UserId> base, std::uint64_t mask)
{
    std::vector<UserId> members;
    for (std::size_t k = 0; k < base.size(); ++k)
        if (mask >> k & 1U)
            members.push_back(base[k]);
    return Coalition(std::move(members));
}

// Payoffs of the members of `whole` (in order) when playing in `parts`.
std::vector<Payoff> aligned(const Coalition& whole, std::span<const Coalition> parts,
                            PayoffCache& cache)
{
    std::vector<Payoff> out(whole.size());
    for (const auto& part : parts)
        for (std::size_t k = 0; k < part.size(); ++k) {
            const auto pos = std::lower_bound(whole.members().begin(), whole.members().end(),
                                              part.members()[k]) -
                             whole.members().begin();
            out[static_cast<std::size_t>(pos)] = cache.payoff(part, k);
        }
    return out;
}

PayoffVector values(std::span<const Coalition> parts, PayoffCache& cache)
{
    std::vector<PayoffVector> pieces;
    for (const auto& part : parts)
        pieces.push_back(cache.value(part));
    return PayoffVector::join(pieces);
}

StabilityWitness witness(EventKind kind, std::vector<Coalition> before,
                         std::vector<Coalition> after, PayoffCache& cache)
{
    StabilityWitness w;
    w.kind = kind;
    w.payoffs_before = values(before, cache);
    w.payoffs_after = values(after, cache);
    w.before = std::move(before);
    w.after = std::move(after);
    return w;
}

// First legal split of c preferred to c, if any.
std::optional<std::vector<Coalition>> preferred_split(const Coalition& c, std::size_t k,
                                                      PayoffCache& cache)
{
    const std::vector<Payoff> incumbent = cache.payoffs(c);
    std::optional<std::vector<Coalition>> found;
    for_each_restricted_partition(
        c.size(), k + 1, 2, c.size(), [&](std::span<const std::uint8_t> labels, std::size_t m) {
            std::vector<Coalition> parts;
            for (std::uint64_t mask : block_masks(labels, m))
                parts.push_back(select(c.span(), mask));
            if (!pareto_improves(aligned(c, parts, cache), incumbent))
                return false;
            found = std::move(parts);
            return true;
        });
    return found;
}

class MergeSearch
{
public:
    MergeSearch(const Partition& t, const FormationConfig& cfg, PayoffCache& cache)
        : blocks_(t.blocks()), cfg_(cfg), cache_(cache), k_(cache.state().num_eavesdroppers())
    {
        const auto& state = cache.state();
        const std::size_t n = blocks_.size();
        usable_.resize(n);
        compatible_.assign(n, std::vector<bool>(n, false));
        for (std::size_t a = 0; a < n; ++a)
            usable_[a] = exchange_feasible(blocks_[a].span(), state);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!usable_[a] || !usable_[b])
                    continue;
                bool ok = true;
                for (UserId i : blocks_[a].members())
                    for (UserId j : blocks_[b].members())
                        ok = ok && within_discovery(state.user_positions[i],
                                                    state.user_positions[j], state.radio);
                compatible_[a][b] = compatible_[b][a] = ok;
            }
    }

    std::optional<StabilityWitness> run()
    {
        for (std::size_t a = 0; a < blocks_.size() && !found_; ++a)
            if (usable_[a]) {
                chosen_ = {a};
                grow(a + 1, blocks_[a].size());
            }
        return std::move(found_);
    }

private:
    void grow(std::size_t from, std::size_t size)
    {
        if (chosen_.size() >= 2 && legal_coalition_size(size, k_) &&
            size <= cfg_.max_coalition_size)
            test();
        if (found_ || chosen_.size() >= cfg_.max_merge_set)
            return;
        for (std::size_t b = from; b < blocks_.size() && !found_; ++b) {
            if (size + blocks_[b].size() > cfg_.max_coalition_size)
                continue;
            bool ok = true;
            for (std::size_t a : chosen_)
                ok = ok && compatible_[a][b];
            if (!ok)
                continue;
            chosen_.push_back(b);
            grow(b + 1, size + blocks_[b].size());
            chosen_.pop_back();
        }
    }

    void test()
    {
        if (++tested_ > merge_budget)
            throw TooLargeToVerify("more than " + std::to_string(merge_budget) +
                                   " candidate merges");
        std::vector<Coalition> parts;
        for (std::size_t a : chosen_)
            parts.push_back(blocks_[a]);
        const Coalition merged = merge(parts);
        const std::vector<Payoff> incumbent = aligned(merged, parts, cache_);
        if (cache_.improves_on(merged, incumbent))
            found_ = witness(EventKind::merge, std::move(parts), {merged}, cache_);
    }

    const std::vector<Coalition>& blocks_;
    const FormationConfig& cfg_;
    PayoffCache& cache_;
    std::size_t k_;
    std::vector<bool> usable_;
    std::vector<std::vector<bool>> compatible_;
    std::vector<std::size_t> chosen_;
    std::size_t tested_ = 0;
    std::optional<StabilityWitness> found_;
};

// Condition 1 for one block: every legal sub-union beats each of its legal
// splits.
bool unions_preferred(const Coalition& block, std::size_t k, PayoffCache& cache)
{
    const std::uint64_t full = (std::uint64_t{1} << block.size()) - 1;
    for (std::uint64_t mask = 1; mask <= full; ++mask) {
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        if (size < 2 || !legal_coalition_size(size, k))
            continue;
        const Coalition u = select(block.span(), mask);
        const std::vector<Payoff> merged = cache.payoffs(u);
        const bool violated = for_each_restricted_partition(
            size, k + 1, 2, size, [&](std::span<const std::uint8_t> labels, std::size_t m) {
                std::vector<Coalition> parts;
                for (std::uint64_t sub : block_masks(labels, m))
                    parts.push_back(select(u.span(), sub));
                return !pareto_improves(merged, aligned(u, parts, cache));
            });
        if (violated)
            return false;
    }
    return true;
}

// Condition 2: groups spanning several blocks prefer their projection.
bool projections_preferred(const Partition& t, std::size_t k, PayoffCache& cache)
{
    const std::size_t n = t.num_users();
    std::vector<std::uint64_t> block_mask;
    for (const auto& b : t.blocks()) {
        std::uint64_t m = 0;
        for (UserId u : b.members())
            m |= std::uint64_t{1} << u;
        block_mask.push_back(m);
    }
    std::vector<UserId> everyone(n);
    for (std::size_t u = 0; u < n; ++u)
        everyone[u] = u;

    for (std::uint64_t g = 1; g < (std::uint64_t{1} << n); ++g) {
        const auto size = static_cast<std::size_t>(std::popcount(g));
        if (size < 2 || !legal_coalition_size(size, k))
            continue;
        std::vector<std::uint64_t> pieces;
        for (std::uint64_t b : block_mask)
            if (g & b)
                pieces.push_back(g & b);
        if (pieces.size() < 2)
            continue;
        const Coalition group = select(everyone, g);
        const std::vector<Payoff> incumbent = cache.payoffs(group);
        if (std::any_of(incumbent.begin(), incumbent.end(),
                        [](Payoff p) { return p.is_negative_infinity(); }))
            continue;
        std::vector<Coalition> parts;
        for (std::uint64_t piece : pieces) {
            if (!legal_coalition_size(static_cast<std::size_t>(std::popcount(piece)), k))
                return false;
            parts.push_back(select(everyone, piece));
        }
        if (!pareto_improves(aligned(group, parts, cache), incumbent))
            return false;
    }
    return true;
}

bool dc_conditions(const Partition& t, PayoffCache& cache)
{
    const std::size_t k = cache.state().num_eavesdroppers();
    for (const auto& block : t.blocks())
        if (!unions_preferred(block, k, cache))
            return false;
    return projections_preferred(t, k, cache);
}

void require_dc_size(std::size_t n)
{
    if (n > 10)
        throw TooLargeToVerify("D_c verification needs N <= 10, got " + std::to_string(n));
}

} // namespace

DhpReport is_dhp_stable(const Partition& t, const FormationConfig& cfg, const NetworkState& state)
{
    state.validate();
    const std::size_t k = state.num_eavesdroppers();
    if (t.num_users() != state.num_users())
        throw ValidationError("partition covers " + std::to_string(t.num_users()) +
                              " users, network has " + std::to_string(state.num_users()));
    const bool small_coalitions = std::all_of(t.blocks().begin(), t.blocks().end(),
                                              [](const Coalition& c) { return c.size() <= 10; });
    if (t.num_users() > 12 && !small_coalitions)
        throw TooLargeToVerify("needs N <= 12 or coalitions of at most 10 users");

    PayoffCache cache(state, cfg.protocol);
    DhpReport report;
    for (const auto& c : t.blocks()) {
        if (c.size() < 2)
            continue;
        if (auto parts = preferred_split(c, k, cache)) {
            report.stable = false;
            report.witness = witness(EventKind::split, {c}, std::move(*parts), cache);
            return report;
        }
    }
    if (auto found = MergeSearch(t, cfg, cache).run()) {
        report.stable = false;
        report.witness = std::move(found);
    }
    return report;
}

bool check_dc_partition(const Partition& t, const NetworkState& state, Protocol protocol)
{
    state.validate();
    require_dc_size(state.num_users());
    if (t.num_users() != state.num_users())
        throw ValidationError("partition does not match the network");
    const std::size_t k = state.num_eavesdroppers();
    for (const auto& c : t.blocks())
        if (!legal_coalition_size(c.size(), k))
            return false;
    PayoffCache cache(state, protocol);
    return dc_conditions(t, cache);
}

std::vector<Partition> find_dc_partitions(const NetworkState& state, Protocol protocol)
{
    state.validate();
    const std::size_t n = state.num_users();
    require_dc_size(n);
    PayoffCache cache(state, protocol);
    std::vector<UserId> everyone(n);
    for (std::size_t u = 0; u < n; ++u)
        everyone[u] = u;
    std::vector<Partition> out;
    for_each_restricted_partition(
        n, state.num_eavesdroppers() + 1, 1, n,
        [&](std::span<const std::uint8_t> labels, std::size_t m) {
            std::vector<Coalition> blocks;
            for (std::uint64_t mask : block_masks(labels, m))
                blocks.push_back(select(everyone, mask));
            Partition p(std::move(blocks), n);
            if (dc_conditions(p, cache))
                out.push_back(std::move(p));
            return false;
        });
    return out;
}

} // namespace coalsec
