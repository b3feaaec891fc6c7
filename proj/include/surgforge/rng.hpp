#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "surgforge/digest.hpp"

namespace surgforge {

/// splitmix64 finalizer; turns any 64-bit value into a well-mixed one.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Unbiased draw in [0, bound). std::uniform_int_distribution is
/// implementation-defined, so outputs would differ across standard
/// libraries; this rejection sampler keeps them portable.
inline std::uint64_t bounded_rand(std::mt19937_64& gen, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t r;
    do {
        r = gen();
    } while (r >= limit);
    return r % bound;
}

/// Fisher-Yates with portable draws. Same seed, same permutation, anywhere.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_rand(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// 50/50 coin keyed on (seed, key). Keying on the clip id means adding or
/// removing clips never reshuffles the outcomes of the others.
inline bool keyed_coin(std::uint64_t seed, std::string_view key) {
    return (mix64(fnv1a64(key) ^ seed) & 1ULL) != 0;
}

}  // namespace surgforge
