#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcmot/rng.hpp"

namespace gcmot {

struct GcmParams {
    double alpha = 3.8;
    double epsilon = 0.0;
    int n_elements = 100;
    double delta = 1e-6;
    double noise_amplitude = 1e-12;
    std::uint64_t init_seed = 0;
    std::uint64_t noise_seed = 0;
};

inline void validate(const GcmParams& p) {
    if (!(p.alpha >= 0.0 && p.alpha <= 4.0))
        throw std::invalid_argument("alpha must lie in [0, 4], got " + std::to_string(p.alpha));
    if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1], got " + std::to_string(p.epsilon));
    if (p.n_elements < 1)
        throw std::invalid_argument("n_elements must be at least 1, got " + std::to_string(p.n_elements));
    if (!(p.delta > 0.0))
        throw std::invalid_argument("delta must be positive, got " + std::to_string(p.delta));
    if (!(p.noise_amplitude >= 0.0))
        throw std::invalid_argument("noise_amplitude must be nonnegative, got " +
                                    std::to_string(p.noise_amplitude));
    if (!(p.noise_amplitude < p.delta))
        throw std::invalid_argument("noise_amplitude must stay below delta, got " +
                                    std::to_string(p.noise_amplitude) + " with delta " +
                                    std::to_string(p.delta));
}

struct SystemState {
    std::vector<double> values;  // one entry per lattice element, each in [0, 1]
    int time = 0;
};

struct Trajectory {
    std::vector<SystemState> states;  // states[n].time == n
};

inline double logistic(double alpha, double x) noexcept {
    return alpha * x * (1.0 - x);
}

// Per-element perturbation for one step, uniform on [-amplitude, amplitude].
// The draw is keyed by (seed, step, element), so two runs sharing a noise seed
// see identical perturbations regardless of how states are produced or stored.
inline std::vector<double> noise_vector(std::uint64_t noise_seed, int step, int n_elements,
                                        double amplitude) {
    std::vector<double> out(static_cast<std::size_t>(n_elements));
    for (int i = 0; i < n_elements; ++i) {
        const double u = to_unit(keyed_bits(noise_seed, static_cast<std::uint64_t>(step),
                                            static_cast<std::uint64_t>(i)));
        out[static_cast<std::size_t>(i)] = amplitude * (2.0 * u - 1.0);
    }
    return out;
}

// One synchronous update: each element is damped toward the mean field of the
// mapped values. The mean is accumulated over a sorted copy so that the result
// is bitwise invariant under any permutation of the elements.
inline SystemState step(const SystemState& state, const GcmParams& params,
                        const std::vector<double>& noise) {
    const std::size_t n = state.values.size();
    if (noise.size() != n)
        throw std::invalid_argument("step: noise length " + std::to_string(noise.size()) +
                                    " does not match state length " + std::to_string(n));

    std::vector<double> mapped(n);
    for (std::size_t i = 0; i < n; ++i)
        mapped[i] = logistic(params.alpha, state.values[i]);

    std::vector<double> sorted = mapped;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    const double mean_field = sum / static_cast<double>(n);

    SystemState next;
    next.time = state.time + 1;
    next.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = (1.0 - params.epsilon) * mapped[i] + params.epsilon * mean_field + noise[i];
        next.values[i] = std::clamp(v, 0.0, 1.0);
    }
    return next;
}

// Initial condition: n independent uniform draws on [0, 1), one stream per seed.
inline SystemState make_initial(std::uint64_t init_seed, int n_elements) {
    if (n_elements < 1)
        throw std::invalid_argument("make_initial: n_elements must be at least 1");
    std::mt19937_64 gen(init_seed);
    SystemState s;
    s.time = 0;
    s.values.resize(static_cast<std::size_t>(n_elements));
    for (auto& v : s.values) v = to_unit(gen());
    return s;
}

// Runs the map and hands every state (including the initial one) to the
// visitor in time order. Nothing is retained, so long runs stay cheap.
template <typename Visitor>
void simulate_stream(const GcmParams& params, int total_steps, Visitor&& visit) {
    validate(params);
    if (total_steps < 1)
        throw std::invalid_argument("simulate_stream: total_steps must be at least 1");
    SystemState state = make_initial(params.init_seed, params.n_elements);
    visit(static_cast<const SystemState&>(state));
    for (int n = 0; n < total_steps; ++n) {
        const std::vector<double> noise =
            noise_vector(params.noise_seed, n, params.n_elements, params.noise_amplitude);
        state = step(state, params, noise);
        visit(static_cast<const SystemState&>(state));
    }
}

inline Trajectory simulate(const GcmParams& params, int total_steps) {
    Trajectory t;
    t.states.reserve(static_cast<std::size_t>(total_steps) + 1);
    simulate_stream(params, total_steps, [&t](const SystemState& s) { t.states.push_back(s); });
    return t;
}

}  // namespace gcmot
