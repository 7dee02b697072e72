#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mgms::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream: the value at position `counter` of the stream named
/// `key` depends on nothing else, so draws can be made in any order.
constexpr std::uint64_t at(std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(mix64(key) ^ mix64(counter ^ 0xd1b54a32d192ed03ULL));
}

/// Uniform double in the open interval (0, 1).
constexpr double uniform(std::uint64_t key, std::uint64_t counter) noexcept {
    return (static_cast<double>(at(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on counters (2i, 2i+1).
inline double normal(std::uint64_t key, std::uint64_t index) noexcept {
    const double u1 = uniform(key, 2 * index);
    const double u2 = uniform(key, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace mgms::rng
