#pragma once

// Counter-based seeding. Every random quantity in the library is a pure
// function of (master seed, counter), so results do not depend on how trials
// are scheduled across workers.

#include <cstdint>
#include <numbers>

#include "ccnet/lattice.hpp"

namespace ccnet {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent child seed for stream `counter` of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    return splitmix64(splitmix64(master) ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) { return double(bits >> 11) * 0x1.0p-53; }

constexpr std::uint64_t site_key(Site s) {
    return (std::uint64_t(std::uint32_t(s.m)) << 32) | std::uint64_t(std::uint32_t(s.n));
}

/// Uniform angle in [0, 2π) attached to `site` under `seed`.
inline double site_angle(std::uint64_t seed, Site site) {
    return 2.0 * std::numbers::pi * to_unit(derive_seed(seed, site_key(site)));
}

}  // namespace ccnet
