#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcmot/dynamics.hpp"

namespace gcmot {

// Largest grid point delta * k that does not exceed x. The quotient x / delta
// is corrected by one grid unit where rounding in the division lands the floor
// on the wrong side; without this, values already on the grid can drop a bin
// and the operation stops being idempotent.
inline double quantize(double x, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("quantize: delta must be positive");
    double k = std::floor(x / delta);
    if ((k + 1.0) * delta <= x)
        k += 1.0;
    else if (k * delta > x)
        k -= 1.0;
    return delta * k;
}

inline std::vector<double> quantize(std::span<const double> values, double delta) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = quantize(values[i], delta);
    return out;
}

inline std::vector<double> quantize(const SystemState& state, double delta) {
    return quantize(std::span<const double>(state.values), delta);
}

// Cluster sizes at resolution delta, sorted largest first. Two elements share
// a cluster exactly when their quantized values coincide, so the sizes form a
// partition of the element count.
struct ClusteringPattern {
    std::vector<int> sizes;

    int cluster_count() const noexcept { return static_cast<int>(sizes.size()); }
    int total() const noexcept {
        int t = 0;
        for (int s : sizes) t += s;
        return t;
    }
    friend bool operator==(const ClusteringPattern&, const ClusteringPattern&) = default;
};

inline ClusteringPattern cluster_pattern(std::span<const double> values, double delta) {
    if (values.empty()) throw std::invalid_argument("cluster_pattern: empty state");
    std::vector<double> q = quantize(values, delta);
    std::sort(q.begin(), q.end());
    ClusteringPattern pattern;
    std::size_t run = 1;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] == q[i - 1]) {
            ++run;
        } else {
            pattern.sizes.push_back(static_cast<int>(run));
            run = 1;
        }
    }
    pattern.sizes.push_back(static_cast<int>(run));
    std::sort(pattern.sizes.begin(), pattern.sizes.end(), std::greater<>());
    return pattern;
}

inline ClusteringPattern cluster_pattern(const SystemState& state, double delta) {
    return cluster_pattern(std::span<const double>(state.values), delta);
}

// Number of distinct quantized values; N for a fully desynchronized state,
// 1 for a fully synchronized one.
inline int effective_dimension(std::span<const double> values, double delta) {
    return cluster_pattern(values, delta).cluster_count();
}

inline int effective_dimension(const SystemState& state, double delta) {
    return effective_dimension(std::span<const double>(state.values), delta);
}

// Probability that a uniformly chosen element sits in a cluster of each size:
// mass[i-1] = i * (number of size-i clusters) / N for sizes i = 1..N.
struct ClusterDistribution {
    std::vector<double> mass;

    int size() const noexcept { return static_cast<int>(mass.size()); }
};

inline ClusterDistribution cluster_distribution(const ClusteringPattern& pattern) {
    const int n = pattern.total();
    if (n < 1) throw std::invalid_argument("cluster_distribution: empty pattern");
    std::vector<int> count(static_cast<std::size_t>(n) + 1, 0);
    for (int s : pattern.sizes) {
        if (s < 1 || s > n)
            throw std::invalid_argument("cluster_distribution: cluster size " + std::to_string(s) +
                                        " outside 1.." + std::to_string(n));
        ++count[static_cast<std::size_t>(s)];
    }
    ClusterDistribution dist;
    dist.mass.resize(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i <= n; ++i) {
        const long long weighted = static_cast<long long>(i) * count[static_cast<std::size_t>(i)];
        dist.mass[static_cast<std::size_t>(i - 1)] =
            static_cast<double>(weighted) / static_cast<double>(n);
    }
    return dist;
}

}  // namespace gcmot
