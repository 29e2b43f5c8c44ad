#pragma once

#include <cstdint>
#include <initializer_list>

namespace coalsec {

/// SplitMix64 finalizer; used to derive independent seeds deterministically.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds several words into one seed.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words)
{
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t w : words)
        h = splitmix64(h ^ w);
    return h;
}

/// Maps 64 random bits to [0, 1).
constexpr double unit_interval(std::uint64_t bits)
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace coalsec
