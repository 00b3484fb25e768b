#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dmidas {

/// SplitMix64 finalizer; bijective mixing of a 64-bit word.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent seed for `purpose` (e.g. "init", "shuffle") and `index`
/// from a single root seed. Stable across platforms.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                        std::uint64_t index = 0) noexcept;

/// Maps 64 random bits to a double in [0, 1) with 53 bits of precision.
[[nodiscard]] constexpr double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/**
 * Seeded pseudo-random source used for initialization, shuffling and search.
 *
 * Wraps std::mt19937_64 but does its own conversion to floating point and
 * bounded integers, so sequences are identical across standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return bits_to_unit(engine_()); }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/**
 * Counter-based standard normal generator: the value at `counter` depends only on
 * (seed, counter). Uses two SplitMix64 draws and the cosine branch of Box-Muller:
 *
 *   u1 = ((splitmix64(seed ^ splitmix64(2c))     >> 11) + 1) * 2^-53   in (0, 1]
 *   u2 = ( splitmix64(seed ^ splitmix64(2c + 1)) >> 11)      * 2^-53   in [0, 1)
 *   z  = sqrt(-2 ln u1) * cos(2 pi u2)
 */
[[nodiscard]] double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept;

}  // namespace dmidas
