#pragma once

#include <cstdint>

namespace gcmot {

// SplitMix64 step: bijective 64-bit mixer with the golden-gamma increment.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stateless counter stream: the value depends only on (seed, a, b).
constexpr std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

// Top 53 bits mapped to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace gcmot
