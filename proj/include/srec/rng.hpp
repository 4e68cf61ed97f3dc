#pragma once

#include <cmath>
#include <cstdint>

namespace srec {

// SplitMix64 finalizer: bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives the seed of an independent stream from (seed, index).
/// Stream splitting rule used everywhere trials or tables need private
/// randomness: stream i of seed s is SplitMix64 seeded with
/// mix64(s + (i+1) * golden), so distinct (s, i) pairs collide only by
/// 64-bit accident.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + (index + 1) * 0x9e3779b97f4a7c15ull);
}

/// Counter-based 64-bit generator (SplitMix64). The state is a plain counter
/// advanced by a fixed odd constant; each output is mix64 of the counter, so
/// the sequence is reproducible across platforms and thread schedules.
struct SplitMix64 {
    std::uint64_t state = 0;

    SplitMix64() = default;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        return mix64(state);
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Unbiased-enough integer in [0, bound) via 128-bit multiply-shift.
    std::uint64_t bounded(std::uint64_t bound) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller. Always consumes exactly two words and
    /// returns the cosine branch, so the stream position never depends on
    /// caller history.
    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        // Guard log(0): the smallest representable u1 is 0; nudge it up.
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
};

}  // namespace srec
