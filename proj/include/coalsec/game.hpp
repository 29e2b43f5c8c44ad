#pragma once

// Non-transferable-utility game layer: coalitions, collections, partitions,
// per-user payoff vectors and the Pareto order used for merge/split decisions.

#include "coalsec/secrecy.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace coalsec {

/// Non-empty set of users, stored sorted ascending.
class Coalition
{
public:
    Coalition() = default;
    /// Sorts the members; throws ValidationError on duplicates or empty input.
    explicit Coalition(std::vector<UserId> members);
    Coalition(std::initializer_list<UserId> members) : Coalition(std::vector<UserId>(members)) {}

    const std::vector<UserId>& members() const { return members_; }
    std::span<const UserId> span() const { return members_; }
    std::size_t size() const { return members_.size(); }
    UserId smallest() const { return members_.front(); }
    bool contains(UserId u) const;

    friend bool operator==(const Coalition&, const Coalition&) = default;
    friend auto operator<=>(const Coalition&, const Coalition&) = default;

private:
    std::vector<UserId> members_;
};

Coalition merge(std::span<const Coalition> parts);
std::string to_string(const Coalition& c);

struct CoalitionHash
{
    std::size_t operator()(const Coalition& c) const noexcept;
};

/// Pairwise-disjoint coalitions over some subset of the users. Blocks are
/// kept in canonical order (by smallest member).
class Collection
{
public:
    Collection() = default;
    explicit Collection(std::vector<Coalition> blocks);

    const std::vector<Coalition>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    /// Sorted list of covered users.
    std::vector<UserId> players() const;

    friend bool operator==(const Collection&, const Collection&) = default;

protected:
    std::vector<Coalition> blocks_;
};

/// Collection covering exactly users 0..num_users-1.
class Partition : public Collection
{
public:
    Partition() = default;
    Partition(std::vector<Coalition> blocks, std::size_t num_users);

    static Partition singletons(std::size_t num_users);

    std::size_t num_users() const { return num_users_; }
    /// Index of the block containing u.
    std::size_t block_of(UserId u) const;

    friend bool operator==(const Partition& a, const Partition& b)
    {
        return a.num_users_ == b.num_users_ && a.blocks_ == b.blocks_;
    }

private:
    std::size_t num_users_ = 0;
};

std::string to_string(const Collection& c);

/// Per-user payoffs, sorted by user.
class PayoffVector
{
public:
    PayoffVector() = default;
    explicit PayoffVector(std::vector<std::pair<UserId, Payoff>> entries);

    const std::vector<std::pair<UserId, Payoff>>& entries() const { return entries_; }
    std::vector<UserId> players() const;
    /// Throws std::out_of_range for an uncovered user.
    Payoff at(UserId u) const;
    std::size_t size() const { return entries_.size(); }
    bool any_negative_infinity() const;

    /// Concatenates disjoint vectors.
    static PayoffVector join(std::span<const PayoffVector> parts);

    friend bool operator==(const PayoffVector&, const PayoffVector&) = default;

private:
    std::vector<std::pair<UserId, Payoff>> entries_;
};

/// Payoff of every member of S in its own slot.
PayoffVector coalition_value(const Coalition& s, Protocol protocol, const NetworkState& state);

/// Payoffs of every player of a collection, from a per-coalition valuation.
PayoffVector collection_value(const Collection& c,
                              const std::function<PayoffVector(const Coalition&)>& value);

/// Weak dominance everywhere with at least one strict improvement, on two
/// aligned payoff lists.
bool pareto_improves(std::span<const Payoff> candidate, std::span<const Payoff> incumbent);

/// Pareto order on two collections of the same players. Throws
/// MismatchedPlayers if the collections or payoff vectors cover different users.
bool pareto_prefers(const Collection& r, const Collection& s, const PayoffVector& payoffs_r,
                    const PayoffVector& payoffs_s);

} // namespace coalsec
