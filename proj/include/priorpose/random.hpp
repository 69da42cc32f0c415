#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace priorpose {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for a (seed, k1, k2, ...) coordinate. Streams depend
/// only on their coordinates, never on scheduling order.
inline Rng derive_rng(uint64_t seed, std::initializer_list<uint64_t> keys) {
    uint64_t h = splitmix64(seed);
    for (uint64_t k : keys)
        h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open01(Rng &rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace priorpose
