#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace skyirr {

// All randomness in the library flows through this engine. The helpers below
// avoid std:: distributions so that streams are identical across standard
// library implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n)
{
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

template <class T>
void shuffle(std::span<T> items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
    return seed + index;
}

} // namespace skyirr
