#pragma once

#include <array>
#include <cstdint>

namespace renal {

// Pinned pseudo-random generators. Every random draw in the project
// (bootstrap resampling, synthetic textures, randomized placement) flows
// through these two algorithms so results are bit-reproducible across
// platforms and worker counts:
//
//   splitmix64   — Steele/Lea/Flood mixer, constants 0x9E3779B97F4A7C15,
//                  0xBF58476D1CE4E5B9, 0x94D049BB133111EB.
//   xoshiro256** — Blackman/Vigna, scrambler rotl(s1*5,7)*9, shifts 17/45.
//
// Bounded draws use the multiply-shift mapping (x * n) >> 64 on the full
// 64-bit output; doubles take the top 53 bits. std::uniform_*_distribution
// is deliberately avoided (its output is implementation-defined).

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic combination of two seeds (e.g. dataset seed + slide index).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    return splitmix64(s);
}

class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, n). Multiply-shift keeps the mapping platform-stable.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Uniform in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(bounded(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace renal
