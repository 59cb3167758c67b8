#pragma once

// Shared generators for the test suites. Everything is seeded explicitly so
// failures reproduce.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "gcmot/gcmot.hpp"

namespace testsupport {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64{seed}; }

// Random integer partition of n: uniform chunk sizes until n is used up.
inline std::vector<int> random_partition(std::mt19937_64& gen, int n) {
    std::vector<int> parts;
    int remaining = n;
    while (remaining > 0) {
        std::uniform_int_distribution<int> d(1, remaining);
        const int part = d(gen);
        parts.push_back(part);
        remaining -= part;
    }
    std::sort(parts.begin(), parts.end(), std::greater<>());
    return parts;
}

inline gcmot::ClusteringPattern make_pattern(std::vector<int> sizes) {
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return gcmot::ClusteringPattern{std::move(sizes)};
}

// Distribution on the 1/n lattice, i.e. one that an actual clustering pattern
// could produce.
inline gcmot::ClusterDistribution random_lattice_distribution(std::mt19937_64& gen, int n) {
    return gcmot::cluster_distribution(gcmot::ClusteringPattern{random_partition(gen, n)});
}

// Generic point of the probability simplex, off the lattice almost surely.
inline gcmot::ClusterDistribution random_simplex(std::mt19937_64& gen, int n) {
    std::exponential_distribution<double> expo(1.0);
    gcmot::ClusterDistribution dist;
    dist.mass.resize(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& m : dist.mass) {
        m = expo(gen);
        sum += m;
    }
    for (auto& m : dist.mass) m /= sum;
    return dist;
}

inline gcmot::SystemState make_state(std::vector<double> values, int time = 0) {
    gcmot::SystemState s;
    s.values = std::move(values);
    s.time = time;
    return s;
}

// Trajectory assembled from raw value vectors, times 0, 1, 2, ...
inline gcmot::Trajectory make_trajectory(const std::vector<std::vector<double>>& frames) {
    gcmot::Trajectory t;
    for (std::size_t i = 0; i < frames.size(); ++i)
        t.states.push_back(make_state(frames[i], static_cast<int>(i)));
    return t;
}

}  // namespace testsupport
