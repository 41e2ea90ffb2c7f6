// random.hpp
//
// Seeding and uniform draws for reproducible simulation.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Uniform doubles are built from the top 53 bits of one draw
// instead of std::uniform_real_distribution (whose algorithm is
// implementation-defined), so a given seed yields the same path on every
// conforming toolchain.
#pragma once

#include <cstdint>
#include <random>

namespace ustat {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Seed of replicate `r` under `master`:
///   mix(master, r) = splitmix64(master + 0x9E3779B97F4A7C15 * (r + 1))   (mod 2^64)
/// Replicate streams are therefore independent of how replicates are
/// scheduled across workers.
constexpr std::uint64_t mix(std::uint64_t master, std::uint64_t r) noexcept {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (r + 1));
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ustat
