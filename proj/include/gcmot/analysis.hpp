#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gcmot/clustering.hpp"
#include "gcmot/dynamics.hpp"
#include "gcmot/transport.hpp"

namespace gcmot {

struct OtSeries {
    std::vector<double> values;  // values[n] compares the patterns at steps n and n + 1
};

struct EdSeries {
    std::vector<int> values;  // values[n] is the cluster count at step n
};

// Consumes states in time order and accumulates both series in one pass.
// Consecutive equal patterns are emitted as exact 0.0 without running the
// distance, which is the value the closed form returns for identical inputs.
class SeriesBuilder {
  public:
    explicit SeriesBuilder(double delta) : delta_(delta) {}

    void feed(const SystemState& state) {
        ClusteringPattern pattern = cluster_pattern(state, delta_);
        ed_.values.push_back(pattern.cluster_count());
        if (has_prev_) {
            if (pattern == prev_) {
                ot_.values.push_back(0.0);
            } else {
                ot_.values.push_back(
                    w1_1d(cluster_distribution(prev_), cluster_distribution(pattern)));
            }
        }
        prev_ = std::move(pattern);
        has_prev_ = true;
    }

    const OtSeries& ot() const noexcept { return ot_; }
    const EdSeries& ed() const noexcept { return ed_; }

  private:
    double delta_;
    ClusteringPattern prev_;
    bool has_prev_ = false;
    OtSeries ot_;
    EdSeries ed_;
};

inline OtSeries ot_series(const Trajectory& trajectory, double delta) {
    if (trajectory.states.size() < 2)
        throw std::invalid_argument("ot_series: need at least two states");
    SeriesBuilder builder(delta);
    for (const SystemState& s : trajectory.states) builder.feed(s);
    return builder.ot();
}

inline EdSeries ed_series(const Trajectory& trajectory, double delta) {
    if (trajectory.states.empty()) throw std::invalid_argument("ed_series: empty trajectory");
    SeriesBuilder builder(delta);
    for (const SystemState& s : trajectory.states) builder.feed(s);
    return builder.ed();
}

namespace detail {

inline void check_window(std::size_t length, int transient, int window, const char* where) {
    if (transient < 0) throw std::out_of_range(std::string(where) + ": negative transient");
    if (window < 1) throw std::out_of_range(std::string(where) + ": window must be at least 1");
    if (static_cast<std::size_t>(transient) + static_cast<std::size_t>(window) > length)
        throw std::out_of_range(std::string(where) + ": transient " + std::to_string(transient) +
                                " plus window " + std::to_string(window) +
                                " exceeds series length " + std::to_string(length));
}

}  // namespace detail

inline double time_average(const OtSeries& series, int transient, int window) {
    detail::check_window(series.values.size(), transient, window, "time_average");
    double sum = 0.0;
    for (int k = 0; k < window; ++k)
        sum += series.values[static_cast<std::size_t>(transient) + static_cast<std::size_t>(k)];
    return sum / static_cast<double>(window);
}

// Mean over realizations that differ only in the initial-condition seed; run
// r uses base.init_seed + r while every run shares base.noise_seed.
inline double ensemble_average(const GcmParams& base, int n_init, int transient, int window) {
    if (n_init < 1) throw std::invalid_argument("ensemble_average: n_init must be at least 1");
    const int total_steps = transient + window;
    double sum = 0.0;
    for (int r = 0; r < n_init; ++r) {
        GcmParams params = base;
        params.init_seed = base.init_seed + static_cast<std::uint64_t>(r);
        SeriesBuilder builder(params.delta);
        simulate_stream(params, total_steps, [&builder](const SystemState& s) { builder.feed(s); });
        sum += time_average(builder.ot(), transient, window);
    }
    return sum / static_cast<double>(n_init);
}

// Entropy in bits of a finite probability map. A single-outcome map gives
// exactly 0 because the lone term is 1 * log2(1).
inline double shannon_entropy(const std::map<int, double>& histogram) {
    double sum = 0.0;
    for (const auto& [value, prob] : histogram) {
        if (!(prob >= 0.0))
            throw std::invalid_argument("shannon_entropy: negative probability for value " +
                                        std::to_string(value));
        sum += prob;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("shannon_entropy: probabilities sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-9");
    double h = 0.0;
    for (const auto& [value, prob] : histogram)
        if (prob > 0.0) h -= prob * std::log2(prob);
    return h + 0.0;  // fold -0.0 from a lone certain outcome into +0.0
}

struct RuinStatistics {
    std::int64_t zero_time_count = 0;       // window steps whose pattern repeats at the next step
    std::map<int, double> ed_histogram;     // cluster-count frequencies over those steps
    double entropy = 0.0;                   // Shannon entropy of ed_histogram, in bits
};

// Strength of the attractor ruins visited inside the window: at every window
// step n with d_n exactly zero, record the cluster count, then measure how
// spread out those counts are. Entropy 0 means the run sits in one ruin (or
// never repeats a pattern at all); larger values mean hopping between ruins
// of different cluster counts.
inline RuinStatistics ruin_strength(const EdSeries& ed, const OtSeries& ot, int transient,
                                    int window) {
    if (ed.values.size() != ot.values.size() + 1)
        throw std::invalid_argument("ruin_strength: series lengths do not match one trajectory");
    detail::check_window(ot.values.size(), transient, window, "ruin_strength");
    std::map<int, std::int64_t> counts;
    std::int64_t total = 0;
    for (int k = 0; k < window; ++k) {
        const std::size_t idx = static_cast<std::size_t>(transient) + static_cast<std::size_t>(k);
        if (ot.values[idx] == 0.0) {
            ++counts[ed.values[idx]];
            ++total;
        }
    }
    RuinStatistics stats;
    stats.zero_time_count = total;
    if (total == 0) return stats;
    for (const auto& [edv, c] : counts)
        stats.ed_histogram[edv] = static_cast<double>(c) / static_cast<double>(total);
    stats.entropy = shannon_entropy(stats.ed_histogram);
    return stats;
}

inline RuinStatistics ruin_strength(const Trajectory& trajectory, double delta, int transient,
                                    int window) {
    SeriesBuilder builder(delta);
    for (const SystemState& s : trajectory.states) builder.feed(s);
    return ruin_strength(builder.ed(), builder.ot(), transient, window);
}

// Everything the sweeps report about a single run, gathered in one pass so a
// long trajectory never has to be materialized.
struct RunStatistics {
    double ot_time_avg = 0.0;
    double ruin_entropy = 0.0;
    std::int64_t ruin_zero_count = 0;
    int final_ed = 0;
    int distinct_ed = 0;  // distinct cluster counts seen inside the window
};

inline RunStatistics run_statistics(const GcmParams& params, int total_steps, int transient,
                                    int window) {
    if (total_steps < transient + window)
        throw std::invalid_argument("run_statistics: total_steps shorter than transient plus window");
    SeriesBuilder builder(params.delta);
    simulate_stream(params, total_steps, [&builder](const SystemState& s) { builder.feed(s); });

    RunStatistics stats;
    stats.ot_time_avg = time_average(builder.ot(), transient, window);
    const RuinStatistics ruin = ruin_strength(builder.ed(), builder.ot(), transient, window);
    stats.ruin_entropy = ruin.entropy;
    stats.ruin_zero_count = ruin.zero_time_count;
    stats.final_ed = builder.ed().values.back();
    std::set<int> seen;
    for (int k = 0; k < window; ++k)
        seen.insert(builder.ed().values[static_cast<std::size_t>(transient) +
                                        static_cast<std::size_t>(k)]);
    stats.distinct_ed = static_cast<int>(seen.size());
    return stats;
}

enum class Phase {
    Coherent,
    Ordered,
    PartiallyOrdered,
    Turbulent,
    Unclassified,
};

constexpr std::string_view phase_name(Phase p) noexcept {
    switch (p) {
        case Phase::Coherent: return "coherent";
        case Phase::Ordered: return "ordered";
        case Phase::PartiallyOrdered: return "partially_ordered";
        case Phase::Turbulent: return "turbulent";
        case Phase::Unclassified: return "unclassified";
    }
    return "unclassified";
}

// Label a parameter point from its ensemble-mean pattern fluctuation and the
// modal final cluster count. Averages below one mass quantum (1 / N) count as
// converged: desynchronized elements of independent runs occasionally land in
// the same resolution bin for a step, so a fully turbulent run keeps a tiny
// positive average that is still far below the smallest real pattern change.
inline Phase classify_phase(double ot_avg, int modal_final_ed, int n_elements) {
    if (n_elements < 1) throw std::invalid_argument("classify_phase: n_elements must be positive");
    if (!(ot_avg >= 0.0)) throw std::invalid_argument("classify_phase: negative average distance");
    if (ot_avg >= 1.0 / static_cast<double>(n_elements)) return Phase::PartiallyOrdered;
    if (modal_final_ed == 1) return Phase::Coherent;
    if (modal_final_ed >= static_cast<int>(0.9 * n_elements)) return Phase::Turbulent;
    if (modal_final_ed >= 2 && modal_final_ed <= static_cast<int>(0.2 * n_elements))
        return Phase::Ordered;
    return Phase::Unclassified;
}

}  // namespace gcmot
