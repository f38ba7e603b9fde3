#pragma once

#include <cstdint>
#include <random>

namespace safedqn {

using Rng = std::mt19937_64;

// Named sub-streams derived from the single user seed.
enum class Stream : std::uint64_t { Env = 1, Agent = 2, Attack = 3, Init = 4, Eval = 5 };

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) noexcept {
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed + splitmix64(index + 0x632be59bd9b4e019ULL));
}

// [0, 1) with 53 random bits; identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [lo, hi] by rejection.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(rng());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r = rng();
    while (r >= limit) r = rng();
    return lo + static_cast<std::int64_t>(r % span);
}

}  // namespace safedqn
