#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "gcmot/analysis.hpp"
#include "support.hpp"

using gcmot::EdSeries;
using gcmot::OtSeries;
using gcmot::Phase;
using gcmot::RuinStatistics;
using gcmot::Trajectory;

namespace {

// ten values pairwise separated well beyond delta = 1e-3
std::vector<double> ten_distinct() {
    std::vector<double> v;
    for (int i = 0; i < 10; ++i) v.push_back(0.05 * (i + 1));
    return v;
}

std::vector<double> ten_equal(double c = 0.3) { return std::vector<double>(10, c); }

// five and five: pattern (5, 5)
std::vector<double> two_fives() {
    std::vector<double> v(5, 0.2);
    v.insert(v.end(), 5, 0.8);
    return v;
}

constexpr double kDelta = 1e-3;

}  // namespace

TEST_CASE("ot series on synthetic trajectories") {
    SUBCASE("alternating full sync and full desync gives a constant 9") {
        const Trajectory t = testsupport::make_trajectory(
            {ten_equal(), ten_distinct(), ten_equal(), ten_distinct(), ten_equal()});
        const OtSeries s = gcmot::ot_series(t, kDelta);
        REQUIRE(s.values.size() == 4);
        for (double d : s.values) CHECK(d == 9.0);
    }
    SUBCASE("constant pattern gives the zero series") {
        // different raw values, same pattern: distance must be exactly zero
        const Trajectory t =
            testsupport::make_trajectory({ten_equal(0.2), ten_equal(0.7), ten_equal(0.4)});
        const OtSeries s = gcmot::ot_series(t, kDelta);
        REQUIRE(s.values.size() == 2);
        for (double d : s.values) CHECK(d == 0.0);
    }
    SUBCASE("converged tail is exactly zero") {
        const Trajectory t = testsupport::make_trajectory(
            {ten_distinct(), two_fives(), ten_equal(), ten_equal(), ten_equal()});
        const OtSeries s = gcmot::ot_series(t, kDelta);
        REQUIRE(s.values.size() == 4);
        CHECK(s.values[0] > 0.0);
        CHECK(s.values[1] > 0.0);
        CHECK(s.values[2] == 0.0);
        CHECK(s.values[3] == 0.0);
    }
    SUBCASE("distinct patterns are at least one mass quantum apart") {
        const Trajectory t = testsupport::make_trajectory({two_fives(), ten_distinct()});
        const OtSeries s = gcmot::ot_series(t, kDelta);
        CHECK(s.values[0] >= 0.1 - 1e-9);
    }
    SUBCASE("too short to compare") {
        const Trajectory t = testsupport::make_trajectory({ten_equal()});
        CHECK_THROWS_AS(gcmot::ot_series(t, kDelta), std::invalid_argument);
    }
}

TEST_CASE("ed series tracks the cluster count") {
    const Trajectory t =
        testsupport::make_trajectory({ten_equal(), two_fives(), ten_distinct()});
    const EdSeries s = gcmot::ed_series(t, kDelta);
    CHECK(s.values == std::vector<int>{1, 2, 10});
    CHECK_THROWS_AS(gcmot::ed_series(Trajectory{}, kDelta), std::invalid_argument);
}

TEST_CASE("simulated ot series lands on the 1/N lattice") {
    gcmot::GcmParams p;
    p.alpha = 3.8;
    p.epsilon = 0.25;
    p.n_elements = 40;
    p.init_seed = 21;
    p.noise_seed = 9;
    const Trajectory t = gcmot::simulate(p, 300);
    const OtSeries ot = gcmot::ot_series(t, p.delta);
    const EdSeries ed = gcmot::ed_series(t, p.delta);
    REQUIRE(ot.values.size() == 300);
    REQUIRE(ed.values.size() == 301);
    for (double d : ot.values) {
        REQUIRE(d >= 0.0);
        const double scaled = d * 40.0;
        REQUIRE(std::abs(scaled - std::llround(scaled)) <= 1e-9);
    }
    for (int e : ed.values) {
        REQUIRE(e >= 1);
        REQUIRE(e <= 40);
    }
}

TEST_CASE("time average") {
    OtSeries s;
    s.values = {1.0, 2.0, 3.0, 4.0};
    CHECK(gcmot::time_average(s, 0, 4) == 2.5);
    CHECK(gcmot::time_average(s, 1, 3) == 3.0);
    CHECK(gcmot::time_average(s, 3, 1) == 4.0);

    SUBCASE("all-zero series averages to exactly zero") {
        OtSeries z;
        z.values.assign(100, 0.0);
        CHECK(gcmot::time_average(z, 50, 50) == 0.0);
    }
    SUBCASE("zero tail averages to exactly zero once the transient covers it") {
        OtSeries z;
        z.values = {5.0, 7.0, 2.0, 0.0, 0.0, 0.0, 0.0};
        CHECK(gcmot::time_average(z, 3, 4) == 0.0);
        CHECK(gcmot::time_average(z, 4, 3) == 0.0);
        CHECK(gcmot::time_average(z, 2, 5) > 0.0);
    }
    SUBCASE("window bounds are enforced") {
        CHECK_THROWS_AS(gcmot::time_average(s, 0, 5), std::out_of_range);
        CHECK_THROWS_AS(gcmot::time_average(s, 4, 1), std::out_of_range);
        CHECK_THROWS_AS(gcmot::time_average(s, -1, 2), std::out_of_range);
        CHECK_THROWS_AS(gcmot::time_average(s, 0, 0), std::out_of_range);
    }
}

TEST_CASE("shannon entropy") {
    CHECK(gcmot::shannon_entropy({{5, 1.0}}) == 0.0);
    CHECK(!std::signbit(gcmot::shannon_entropy({{5, 1.0}})));
    CHECK(gcmot::shannon_entropy({{1, 0.5}, {2, 0.5}}) == 1.0);
    CHECK(gcmot::shannon_entropy({{1, 0.125}, {2, 0.125}, {3, 0.125}, {4, 0.125},
                                  {5, 0.125}, {6, 0.125}, {7, 0.125}, {8, 0.125}}) == 3.0);

    SUBCASE("bounds for random histograms") {
        auto gen = testsupport::make_rng(271828);
        for (int trial = 0; trial < 200; ++trial) {
            const int k = 1 + trial % 16;
            const auto simplex = testsupport::random_simplex(gen, k);
            std::map<int, double> hist;
            for (int i = 0; i < k; ++i) hist[i] = simplex.mass[static_cast<std::size_t>(i)];
            const double h = gcmot::shannon_entropy(hist);
            REQUIRE(h >= 0.0);
            REQUIRE(h <= std::log2(static_cast<double>(k)) + 1e-12);
        }
    }
    SUBCASE("normalization and sign errors") {
        CHECK_THROWS_AS(gcmot::shannon_entropy({{1, 0.7}}), std::invalid_argument);
        CHECK_THROWS_AS(gcmot::shannon_entropy({{1, 0.5}, {2, 0.6}}), std::invalid_argument);
        CHECK_THROWS_AS(gcmot::shannon_entropy({{1, 1.5}, {2, -0.5}}), std::invalid_argument);
    }
}

TEST_CASE("ruin statistics") {
    SUBCASE("constant pattern occupies one ruin for the whole window") {
        const Trajectory t = testsupport::make_trajectory(
            {ten_equal(0.1), ten_equal(0.2), ten_equal(0.3), ten_equal(0.4), ten_equal(0.5),
             ten_equal(0.6)});
        const RuinStatistics r = gcmot::ruin_strength(t, kDelta, 0, 5);
        CHECK(r.zero_time_count == 5);
        REQUIRE(r.ed_histogram.size() == 1);
        CHECK(r.ed_histogram.at(1) == 1.0);
        CHECK(r.entropy == 0.0);
    }
    SUBCASE("never-repeating pattern yields an empty zero set") {
        const Trajectory t = testsupport::make_trajectory(
            {ten_equal(), ten_distinct(), two_fives(), ten_equal()});
        const RuinStatistics r = gcmot::ruin_strength(t, kDelta, 0, 3);
        CHECK(r.zero_time_count == 0);
        CHECK(r.ed_histogram.empty());
        CHECK(r.entropy == 0.0);
    }
    SUBCASE("histogram over hand-built series") {
        EdSeries ed;
        ed.values = {3, 3, 5, 5, 2};
        OtSeries ot;
        ot.values = {0.0, 0.0, 1.0, 0.0};
        const RuinStatistics r = gcmot::ruin_strength(ed, ot, 0, 4);
        CHECK(r.zero_time_count == 3);
        REQUIRE(r.ed_histogram.size() == 2);
        CHECK(r.ed_histogram.at(3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(r.ed_histogram.at(5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        const double expect =
            -(2.0 / 3.0) * std::log2(2.0 / 3.0) - (1.0 / 3.0) * std::log2(1.0 / 3.0);
        CHECK(r.entropy == doctest::Approx(expect).epsilon(1e-15));
        double total = 0.0;
        for (const auto& [edv, prob] : r.ed_histogram) total += prob;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("window restricts which steps count") {
        EdSeries ed;
        ed.values = {3, 3, 5, 5, 2};
        OtSeries ot;
        ot.values = {0.0, 0.0, 1.0, 0.0};
        const RuinStatistics r = gcmot::ruin_strength(ed, ot, 2, 2);
        CHECK(r.zero_time_count == 1);
        CHECK(r.ed_histogram.at(5) == 1.0);
        CHECK(r.entropy == 0.0);
    }
    SUBCASE("input validation") {
        EdSeries ed;
        ed.values = {1, 1};
        OtSeries ot;
        ot.values = {0.0, 0.0};  // wrong length: must be ed length - 1
        CHECK_THROWS_AS(gcmot::ruin_strength(ed, ot, 0, 1), std::invalid_argument);
        ot.values = {0.0};
        CHECK_THROWS_AS(gcmot::ruin_strength(ed, ot, 0, 2), std::out_of_range);
    }
}

TEST_CASE("coherent run statistics") {
    gcmot::GcmParams p;
    p.alpha = 3.8;
    p.epsilon = 0.5;
    p.n_elements = 30;
    p.init_seed = 2;
    p.noise_seed = 77;
    const Trajectory t = gcmot::simulate(p, 900);
    const RuinStatistics r = gcmot::ruin_strength(t, p.delta, 600, 300);
    CHECK(r.zero_time_count == 300);
    REQUIRE(r.ed_histogram.size() == 1);
    CHECK(r.ed_histogram.at(1) == 1.0);
    CHECK(r.entropy == 0.0);
    CHECK(gcmot::time_average(gcmot::ot_series(t, p.delta), 600, 300) == 0.0);
}

TEST_CASE("ensemble average is deterministic and honors the seed schedule") {
    gcmot::GcmParams base;
    base.alpha = 3.8;
    base.epsilon = 0.3;
    base.n_elements = 20;
    base.init_seed = 10;
    base.noise_seed = 5;
    const double a = gcmot::ensemble_average(base, 4, 100, 100);
    const double b = gcmot::ensemble_average(base, 4, 100, 100);
    CHECK(a == b);

    // n_init = 1 must equal the plain time average of that single run
    const Trajectory t = gcmot::simulate(base, 200);
    const double single = gcmot::time_average(gcmot::ot_series(t, base.delta), 100, 100);
    CHECK(gcmot::ensemble_average(base, 1, 100, 100) == single);

    CHECK_THROWS_AS(gcmot::ensemble_average(base, 0, 100, 100), std::invalid_argument);
}

TEST_CASE("ensemble average vanishes for a strongly coupled ensemble") {
    gcmot::GcmParams base;
    base.alpha = 3.8;
    base.epsilon = 0.5;
    base.n_elements = 30;
    base.init_seed = 1;
    base.noise_seed = 12345;
    CHECK(gcmot::ensemble_average(base, 3, 600, 300) == 0.0);
}

TEST_CASE("one-pass run statistics match the materialized computation") {
    gcmot::GcmParams p;
    p.alpha = 3.8;
    p.epsilon = 0.3;
    p.n_elements = 30;
    p.init_seed = 14;
    p.noise_seed = 3;
    const int steps = 400, transient = 200, window = 200;
    const gcmot::RunStatistics fast = gcmot::run_statistics(p, steps, transient, window);

    const Trajectory t = gcmot::simulate(p, steps);
    const OtSeries ot = gcmot::ot_series(t, p.delta);
    const EdSeries ed = gcmot::ed_series(t, p.delta);
    CHECK(fast.ot_time_avg == gcmot::time_average(ot, transient, window));
    const RuinStatistics ruin = gcmot::ruin_strength(t, p.delta, transient, window);
    CHECK(fast.ruin_entropy == ruin.entropy);
    CHECK(fast.ruin_zero_count == ruin.zero_time_count);
    CHECK(fast.final_ed == ed.values.back());

    std::set<int> distinct;
    for (int k = 0; k < window; ++k)
        distinct.insert(ed.values[static_cast<std::size_t>(transient + k)]);
    CHECK(fast.distinct_ed == static_cast<int>(distinct.size()));

    CHECK_THROWS_AS(gcmot::run_statistics(p, 100, 80, 30), std::invalid_argument);
}

TEST_CASE("phase labels") {
    using gcmot::classify_phase;
    CHECK(classify_phase(0.0, 1, 100) == Phase::Coherent);
    CHECK(classify_phase(0.0, 100, 100) == Phase::Turbulent);
    CHECK(classify_phase(0.0, 90, 100) == Phase::Turbulent);
    CHECK(classify_phase(0.05, 7, 100) == Phase::PartiallyOrdered);
    CHECK(classify_phase(0.05, 1, 100) == Phase::PartiallyOrdered);
    CHECK(classify_phase(0.0, 10, 100) == Phase::Ordered);
    CHECK(classify_phase(0.0, 2, 100) == Phase::Ordered);
    CHECK(classify_phase(0.0, 20, 100) == Phase::Ordered);
    CHECK(classify_phase(0.0, 50, 100) == Phase::Unclassified);

    // averages below one mass quantum count as converged
    CHECK(classify_phase(0.0005, 100, 100) == Phase::Turbulent);
    CHECK(classify_phase(0.01, 100, 100) == Phase::PartiallyOrdered);

    CHECK(gcmot::phase_name(Phase::Coherent) == "coherent");
    CHECK(gcmot::phase_name(Phase::PartiallyOrdered) == "partially_ordered");

    CHECK_THROWS_AS(classify_phase(0.1, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(classify_phase(-0.1, 1, 100), std::invalid_argument);
}
