#include "dmidas/rng.hpp"

#include <cmath>
#include <numbers>

namespace dmidas {

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t index) noexcept {
    // FNV-1a over the purpose tag.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(splitmix64(root ^ h) + index);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept {
    const std::uint64_t a = splitmix64(seed ^ splitmix64(2 * counter));
    const std::uint64_t b = splitmix64(seed ^ splitmix64(2 * counter + 1));
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dmidas
