#include "coalsec/game.hpp"

#include "coalsec/error.hpp"

#include <algorithm>
#include <sstream>

namespace coalsec {

Coalition::Coalition(std::vector<UserId> members) : members_(std::move(members))
{
    if (members_.empty())
        throw ValidationError("coalition must not be empty");
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
        throw ValidationError("coalition has duplicate members");
}

bool Coalition::contains(UserId u) const
{
    return std::binary_search(members_.begin(), members_.end(), u);
}

Coalition merge(std::span<const Coalition> parts)
{
    std::vector<UserId> all;
    for (const auto& p : parts)
        all.insert(all.end(), p.members().begin(), p.members().end());
    return Coalition(std::move(all));
}

std::string to_string(const Coalition& c)
{
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < c.size(); ++k)
        os << (k ? "," : "") << c.members()[k];
    os << '}';
    return os.str();
}

std::size_t CoalitionHash::operator()(const Coalition& c) const noexcept
{
    std::size_t h = 1469598103934665603ULL;
    for (UserId u : c.members())
        h = (h ^ (u + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2))) * 1099511628211ULL;
    return h;
}

Collection::Collection(std::vector<Coalition> blocks) : blocks_(std::move(blocks))
{
    std::sort(blocks_.begin(), blocks_.end(),
              [](const Coalition& a, const Coalition& b) { return a.smallest() < b.smallest(); });
    const auto all = players();
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw ValidationError("collection blocks are not disjoint");
}

std::vector<UserId> Collection::players() const
{
    std::vector<UserId> all;
    for (const auto& b : blocks_)
        all.insert(all.end(), b.members().begin(), b.members().end());
    std::sort(all.begin(), all.end());
    return all;
}

Partition::Partition(std::vector<Coalition> blocks, std::size_t num_users)
    : Collection(std::move(blocks)), num_users_(num_users)
{
    const auto all = players();
    bool covers = all.size() == num_users;
    for (std::size_t k = 0; covers && k < all.size(); ++k)
        covers = all[k] == k;
    if (!covers)
        throw ValidationError("partition must cover users 0.." + std::to_string(num_users) +
                              " exactly once");
}

Partition Partition::singletons(std::size_t num_users)
{
    std::vector<Coalition> blocks;
    blocks.reserve(num_users);
    for (UserId u = 0; u < num_users; ++u)
        blocks.push_back(Coalition{u});
    return Partition(std::move(blocks), num_users);
}

std::size_t Partition::block_of(UserId u) const
{
    for (std::size_t k = 0; k < blocks_.size(); ++k)
        if (blocks_[k].contains(u))
            return k;
    throw std::out_of_range("user not in partition");
}

std::string to_string(const Collection& c)
{
    std::string out = "[";
    for (std::size_t k = 0; k < c.size(); ++k)
        out += (k ? " " : "") + to_string(c.blocks()[k]);
    return out + "]";
}

PayoffVector::PayoffVector(std::vector<std::pair<UserId, Payoff>> entries)
    : entries_(std::move(entries))
{
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < entries_.size(); ++k)
        if (entries_[k].first == entries_[k - 1].first)
            throw ValidationError("payoff vector has two entries for user " +
                                  std::to_string(entries_[k].first));
}

std::vector<UserId> PayoffVector::players() const
{
    std::vector<UserId> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_)
        out.push_back(e.first);
    return out;
}

Payoff PayoffVector::at(UserId u) const
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), u,
                               [](const auto& e, UserId v) { return e.first < v; });
    if (it == entries_.end() || it->first != u)
        throw std::out_of_range("no payoff for user " + std::to_string(u));
    return it->second;
}

bool PayoffVector::any_negative_infinity() const
{
    return std::any_of(entries_.begin(), entries_.end(),
                       [](const auto& e) { return e.second.is_negative_infinity(); });
}

PayoffVector PayoffVector::join(std::span<const PayoffVector> parts)
{
    std::vector<std::pair<UserId, Payoff>> all;
    for (const auto& p : parts)
        all.insert(all.end(), p.entries().begin(), p.entries().end());
    return PayoffVector(std::move(all));
}

PayoffVector coalition_value(const Coalition& s, Protocol protocol, const NetworkState& state)
{
    std::vector<std::pair<UserId, Payoff>> entries;
    entries.reserve(s.size());
    for (UserId i : s.members())
        entries.emplace_back(i, coalition_payoff(i, s.span(), protocol, state));
    return PayoffVector(std::move(entries));
}

PayoffVector collection_value(const Collection& c,
                              const std::function<PayoffVector(const Coalition&)>& value)
{
    std::vector<PayoffVector> parts;
    parts.reserve(c.size());
    for (const auto& b : c.blocks())
        parts.push_back(value(b));
    return PayoffVector::join(parts);
}

bool pareto_improves(std::span<const Payoff> candidate, std::span<const Payoff> incumbent)
{
    bool strict = false;
    for (std::size_t k = 0; k < candidate.size(); ++k) {
        if (candidate[k] < incumbent[k])
            return false;
        strict = strict || candidate[k] > incumbent[k];
    }
    return strict;
}

bool pareto_prefers(const Collection& r, const Collection& s, const PayoffVector& payoffs_r,
                    const PayoffVector& payoffs_s)
{
    const auto players = r.players();
    if (players != s.players() || players != payoffs_r.players() ||
        players != payoffs_s.players())
        throw MismatchedPlayers("collections must partition the same users");
    std::vector<Payoff> a, b;
    a.reserve(players.size());
    b.reserve(players.size());
    for (std::size_t k = 0; k < players.size(); ++k) {
        a.push_back(payoffs_r.entries()[k].second);
        b.push_back(payoffs_s.entries()[k].second);
    }
    return pareto_improves(a, b);
}

} // namespace coalsec
