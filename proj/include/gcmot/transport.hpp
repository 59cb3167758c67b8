#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcmot/clustering.hpp"

namespace gcmot {

struct CostMatrix {
    int n = 0;
    std::vector<double> entries;  // row-major, entries[i * n + j]

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

// Ground cost |i - j| between size indices.
inline CostMatrix default_cost(int n) {
    if (n < 1) throw std::invalid_argument("default_cost: n must be at least 1");
    CostMatrix c;
    c.n = n;
    c.entries.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            c.entries[static_cast<std::size_t>(i) * n + j] = static_cast<double>(std::abs(i - j));
    return c;
}

struct TransportPlan {
    int n = 0;
    std::vector<double> entries;  // row-major coupling, row marginals = p, column marginals = q
    double cost = 0.0;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

namespace detail {

inline void check_pair(const ClusterDistribution& p, const ClusterDistribution& q,
                       const char* where) {
    const std::string prefix(where);
    if (p.mass.size() != q.mass.size())
        throw std::invalid_argument(prefix + ": distributions have different lengths " +
                                    std::to_string(p.mass.size()) + " and " +
                                    std::to_string(q.mass.size()));
    if (p.mass.empty()) throw std::invalid_argument(prefix + ": empty distributions");
    double sp = 0.0, sq = 0.0;
    for (double v : p.mass) {
        if (!(v >= 0.0)) throw std::invalid_argument(prefix + ": negative mass in first argument");
        sp += v;
    }
    for (double v : q.mass) {
        if (!(v >= 0.0)) throw std::invalid_argument(prefix + ": negative mass in second argument");
        sq += v;
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
        throw std::invalid_argument(prefix + ": masses must each sum to 1 within 1e-9, got " +
                                    std::to_string(sp) + " and " + std::to_string(sq));
}

}  // namespace detail

// Exact minimum-cost coupling between two mass vectors, by successive shortest
// augmentations with node potentials. The graph is bipartite over the support
// of p (sources) and the support of q (sinks); every augmentation moves the
// full bottleneck mass, which drains at least one source, sink, or backward
// arc, so the round count stays polynomial in the support size. Potentials
// keep every reduced cost nonnegative, which is what makes the final coupling
// optimal for the given cost matrix.
inline TransportPlan ot_lp(const ClusterDistribution& p, const ClusterDistribution& q,
                           const CostMatrix& cost) {
    detail::check_pair(p, q, "ot_lp");
    const int n = p.size();
    if (cost.n != n)
        throw std::invalid_argument("ot_lp: cost matrix is " + std::to_string(cost.n) +
                                    "x" + std::to_string(cost.n) + " but distributions have length " +
                                    std::to_string(n));
    for (double c : cost.entries)
        if (!(c >= 0.0)) throw std::invalid_argument("ot_lp: cost entries must be nonnegative");

    std::vector<int> src, dst;
    std::vector<double> supply, demand;
    for (int i = 0; i < n; ++i)
        if (p.mass[static_cast<std::size_t>(i)] > 0.0) {
            src.push_back(i);
            supply.push_back(p.mass[static_cast<std::size_t>(i)]);
        }
    for (int j = 0; j < n; ++j)
        if (q.mass[static_cast<std::size_t>(j)] > 0.0) {
            dst.push_back(j);
            demand.push_back(q.mass[static_cast<std::size_t>(j)]);
        }

    const int a = static_cast<int>(src.size());
    const int b = static_cast<int>(dst.size());
    const int nodes = a + b;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kDrained = 1e-13;  // remaining mass this small counts as moved
    constexpr double kFlowEps = 1e-15;  // backward arcs need at least this much flow

    std::vector<double> flow(static_cast<std::size_t>(a) * b, 0.0);
    std::vector<double> potential(static_cast<std::size_t>(nodes), 0.0);
    std::vector<double> dist(static_cast<std::size_t>(nodes));
    std::vector<int> prev(static_cast<std::size_t>(nodes));
    std::vector<char> done(static_cast<std::size_t>(nodes));

    const long long max_rounds = 8LL * nodes * nodes + 64;
    for (long long round = 0;; ++round) {
        bool supply_left = false, demand_left = false;
        for (int s = 0; s < a && !supply_left; ++s) supply_left = supply[s] > kDrained;
        for (int t = 0; t < b && !demand_left; ++t) demand_left = demand[t] > kDrained;
        if (!supply_left || !demand_left) break;
        if (round >= max_rounds) throw std::runtime_error("ot_lp: augmentation failed to terminate");

        // Dijkstra on reduced costs, dense scan per extraction.
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(prev.begin(), prev.end(), -1);
        std::fill(done.begin(), done.end(), 0);
        for (int s = 0; s < a; ++s)
            if (supply[s] > kDrained) dist[static_cast<std::size_t>(s)] = 0.0;

        for (int iter = 0; iter < nodes; ++iter) {
            int u = -1;
            double best = kInf;
            for (int v = 0; v < nodes; ++v)
                if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < best) {
                    best = dist[static_cast<std::size_t>(v)];
                    u = v;
                }
            if (u < 0) break;
            done[static_cast<std::size_t>(u)] = 1;
            if (u < a) {
                for (int t = 0; t < b; ++t) {
                    const double rc = cost.at(src[static_cast<std::size_t>(u)],
                                              dst[static_cast<std::size_t>(t)]) +
                                      potential[static_cast<std::size_t>(u)] -
                                      potential[static_cast<std::size_t>(a + t)];
                    const double cand = dist[static_cast<std::size_t>(u)] + rc;
                    if (cand < dist[static_cast<std::size_t>(a + t)]) {
                        dist[static_cast<std::size_t>(a + t)] = cand;
                        prev[static_cast<std::size_t>(a + t)] = u;
                    }
                }
            } else {
                const int t = u - a;
                for (int s = 0; s < a; ++s) {
                    if (flow[static_cast<std::size_t>(s) * b + t] <= kFlowEps) continue;
                    const double rc = -cost.at(src[static_cast<std::size_t>(s)],
                                               dst[static_cast<std::size_t>(t)]) +
                                      potential[static_cast<std::size_t>(u)] -
                                      potential[static_cast<std::size_t>(s)];
                    const double cand = dist[static_cast<std::size_t>(u)] + rc;
                    if (cand < dist[static_cast<std::size_t>(s)]) {
                        dist[static_cast<std::size_t>(s)] = cand;
                        prev[static_cast<std::size_t>(s)] = u;
                    }
                }
            }
        }

        int sink = -1;
        double sink_dist = kInf;
        for (int t = 0; t < b; ++t)
            if (demand[t] > kDrained && dist[static_cast<std::size_t>(a + t)] < sink_dist) {
                sink_dist = dist[static_cast<std::size_t>(a + t)];
                sink = t;
            }
        if (sink < 0) break;  // residual graph has no usable path, only dust remains

        for (int v = 0; v < nodes; ++v)
            potential[static_cast<std::size_t>(v)] +=
                std::min(dist[static_cast<std::size_t>(v)], sink_dist);

        // Bottleneck along the augmenting path, then apply it.
        double theta = demand[sink];
        int source = a + sink;
        for (int v = a + sink; prev[static_cast<std::size_t>(v)] >= 0;
             v = prev[static_cast<std::size_t>(v)]) {
            const int u = prev[static_cast<std::size_t>(v)];
            if (u >= a && v < a)
                theta = std::min(theta, flow[static_cast<std::size_t>(v) * b + (u - a)]);
            source = u;
        }
        theta = std::min(theta, supply[source]);

        for (int v = a + sink; prev[static_cast<std::size_t>(v)] >= 0;
             v = prev[static_cast<std::size_t>(v)]) {
            const int u = prev[static_cast<std::size_t>(v)];
            if (u < a)
                flow[static_cast<std::size_t>(u) * b + (v - a)] += theta;
            else
                flow[static_cast<std::size_t>(v) * b + (u - a)] -= theta;
        }
        supply[source] -= theta;
        demand[sink] -= theta;
    }

    TransportPlan plan;
    plan.n = n;
    plan.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int s = 0; s < a; ++s)
        for (int t = 0; t < b; ++t) {
            const double f = flow[static_cast<std::size_t>(s) * b + t];
            if (f > 0.0)
                plan.entries[static_cast<std::size_t>(src[static_cast<std::size_t>(s)]) * n +
                             dst[static_cast<std::size_t>(t)]] = f;
        }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double f = plan.at(i, j);
            if (f > 0.0) total += f * cost.at(i, j);
        }
    plan.cost = total;

    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += plan.at(i, j);
        if (std::abs(row - p.mass[static_cast<std::size_t>(i)]) > 1e-9)
            throw std::runtime_error("ot_lp: row marginal off by more than 1e-9");
    }
    for (int j = 0; j < n; ++j) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) col += plan.at(i, j);
        if (std::abs(col - q.mass[static_cast<std::size_t>(j)]) > 1e-9)
            throw std::runtime_error("ot_lp: column marginal off by more than 1e-9");
    }
    return plan;
}

inline TransportPlan ot_lp(const ClusterDistribution& p, const ClusterDistribution& q) {
    detail::check_pair(p, q, "ot_lp");
    return ot_lp(p, q, default_cost(p.size()));
}

// First Wasserstein distance for the line cost |i - j|: the L1 distance
// between the two cumulative mass profiles. Equals ot_lp(p, q).cost under the
// default cost, but in closed form.
inline double w1_1d(const ClusterDistribution& p, const ClusterDistribution& q) {
    detail::check_pair(p, q, "w1_1d");
    double cp = 0.0, cq = 0.0, total = 0.0;
    const std::size_t n = p.mass.size();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        cp += p.mass[k];
        cq += q.mass[k];
        total += std::abs(cp - cq);
    }
    return total;
}

}  // namespace gcmot
