#pragma once

// Enumeration of set partitions of {0..n-1} whose blocks are either
// singletons or have at least `min_group` elements.
//
// Partitions are produced as restricted growth strings (labels[k] is the block
// of element k, labels[0] == 0, each new block gets the next label). Order:
// increasing block count, then lexicographic in the growth string.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace coalsec {

namespace detail {

class RestrictedPartitionWalker
{
public:
    RestrictedPartitionWalker(std::size_t n, std::size_t blocks, std::size_t min_group)
        : n_(n), target_(blocks), min_group_(min_group), labels_(n, 0), sizes_(blocks, 0)
    {
    }

    template <typename Visitor>
    bool run(Visitor& visit)
    {
        if (n_ == 0 || target_ == 0 || target_ > n_)
            return false;
        labels_[0] = 0;
        sizes_[0] = 1;
        used_ = 1;
        return descend(1, visit);
    }

private:
    bool legal(std::size_t size) const { return size == 1 || size >= min_group_; }

    std::size_t deficit() const
    {
        std::size_t d = 0;
        for (std::size_t b = 0; b < used_; ++b)
            if (sizes_[b] > 1 && sizes_[b] < min_group_)
                d += min_group_ - sizes_[b];
        return d;
    }

    template <typename Visitor>
    bool descend(std::size_t pos, Visitor& visit)
    {
        const std::size_t remaining = n_ - pos;
        if (remaining < (target_ - used_) + deficit())
            return false;
        if (pos == n_) {
            for (std::size_t b = 0; b < used_; ++b)
                if (!legal(sizes_[b]))
                    return false;
            return visit(std::span<const std::uint8_t>(labels_), target_);
        }
        const std::size_t limit = std::min(used_ + 1, target_);
        for (std::size_t b = 0; b < limit; ++b) {
            const bool opens = b == used_;
            labels_[pos] = static_cast<std::uint8_t>(b);
            ++sizes_[b];
            if (opens)
                ++used_;
            const bool stop = descend(pos + 1, visit);
            if (opens)
                --used_;
            --sizes_[b];
            if (stop)
                return true;
        }
        return false;
    }

    std::size_t n_, target_, min_group_;
    std::vector<std::uint8_t> labels_;
    std::vector<std::size_t> sizes_;
    std::size_t used_ = 0;
};

} // namespace detail

/// Calls visit(labels, block_count) for every partition with between
/// min_blocks and max_blocks blocks. The visitor returns true to stop early;
/// the function then returns true. n must be below 256.
template <typename Visitor>
bool for_each_restricted_partition(std::size_t n, std::size_t min_group, std::size_t min_blocks,
                                   std::size_t max_blocks, Visitor&& visit)
{
    for (std::size_t m = std::max<std::size_t>(min_blocks, 1); m <= std::min(max_blocks, n); ++m) {
        detail::RestrictedPartitionWalker walker(n, m, min_group);
        if (walker.run(visit))
            return true;
    }
    return false;
}

/// Converts labels to one bitmask per block (n <= 64).
inline std::vector<std::uint64_t> block_masks(std::span<const std::uint8_t> labels,
                                              std::size_t blocks)
{
    std::vector<std::uint64_t> masks(blocks, 0);
    for (std::size_t k = 0; k < labels.size(); ++k)
        masks[labels[k]] |= std::uint64_t{1} << k;
    return masks;
}

} // namespace coalsec
