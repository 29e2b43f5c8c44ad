#pragma once

// Exhaustive stability verifiers for small networks.

#include "coalsec/formation.hpp"

#include <optional>
#include <vector>

namespace coalsec {

/// A Pareto-preferred deviation found by a verifier.
struct StabilityWitness
{
    EventKind kind = EventKind::merge;
    std::vector<Coalition> before;
    std::vector<Coalition> after;
    PayoffVector payoffs_before;
    PayoffVector payoffs_after;
};

std::string to_string(const StabilityWitness& w);

struct DhpReport
{
    bool stable = true;
    std::optional<StabilityWitness> witness;
};

/// No coalition has a preferred legal split, and no set of at most
/// cfg.max_merge_set coalitions has a preferred merge into a legal coalition
/// of at most cfg.max_coalition_size users. Merges whose union is outside
/// discovery range are skipped (some member would get -infinity).
/// Throws TooLargeToVerify unless N <= 12 or every coalition has at most 10
/// members, or if the merge search exceeds its budget.
DhpReport is_dhp_stable(const Partition& t, const FormationConfig& cfg, const NetworkState& state);

/// Sufficient conditions under which merge-and-split must end in `t`:
///  1. inside every block, any legal union of two or more disjoint legal
///     sub-coalitions is Pareto-preferred to those sub-coalitions;
///  2. every legal group G with finite payoffs that spans several blocks
///     splits along the blocks into legal pieces that are Pareto-preferred
///     to G.
/// Throws TooLargeToVerify for N > 10.
bool check_dc_partition(const Partition& t, const NetworkState& state, Protocol protocol);

/// All legal partitions passing check_dc_partition. N <= 10.
std::vector<Partition> find_dc_partitions(const NetworkState& state, Protocol protocol);

} // namespace coalsec
