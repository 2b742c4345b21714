#include "reflex/tracker.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace reflex;

namespace {

// Truthful comparison oracle for a hidden target.
TrackerFeedback compare_to(double target, double value) {
    if (value < target) {
        return TrackerFeedback::Up;
    }
    if (value > target) {
        return TrackerFeedback::Down;
    }
    return TrackerFeedback::Good;
}

} // namespace

TEST_CASE("Good feedback leaves the value untouched") {
    TrackerState t = make_tracker(0.0, 1.0, 0.37);
    const double delta_before = t.delta;
    t = apply_feedback(t, TrackerFeedback::Good);
    CHECK(t.value == 0.37);
    CHECK(t.delta == Catch::Approx(delta_before / 2.0));
    CHECK_FALSE(t.last_direction.has_value());
}

TEST_CASE("moves clamp at the interval bounds") {
    TrackerState t = make_tracker(0.0, 1.0, 0.9);
    t.delta = 0.3;
    t = apply_feedback(t, TrackerFeedback::Up);
    CHECK(t.value == 1.0);

    t = make_tracker(0.0, 1.0, 0.1);
    t.delta = 0.3;
    t = apply_feedback(t, TrackerFeedback::Down);
    CHECK(t.value == 0.0);
}

TEST_CASE("tracker homes in on a hidden target within 40 feedbacks") {
    TrackerState t = make_tracker(0.0, 1.0, 0.5);
    REQUIRE(t.delta == Catch::Approx(0.125));
    const double target = 0.42;
    bool reached = false;
    for (int i = 0; i < 40 && !reached; ++i) {
        t = apply_feedback(t, compare_to(target, t.value));
        reached = std::abs(t.value - target) <= 1e-3;
    }
    CHECK(reached);
}

TEST_CASE("at_limit is decided by bound contact alone") {
    TrackerState t = make_tracker(0.0, 1.0, 1.0);
    CHECK(at_limit(t, TrackerFeedback::Up));
    CHECK_FALSE(at_limit(t, TrackerFeedback::Down));

    t = make_tracker(0.0, 1.0, 0.5);
    CHECK_FALSE(at_limit(t, TrackerFeedback::Up));
    CHECK_FALSE(at_limit(t, TrackerFeedback::Down));

    t = make_tracker(0.0, 1.0, 0.0);
    CHECK(at_limit(t, TrackerFeedback::Down));
}

TEST_CASE("at_limit agrees with a one-step lookahead oracle") {
    std::mt19937 gen(17);
    std::uniform_int_distribution<int> coin(0, 1);
    TrackerState t = make_tracker(-2.0, 3.0, 0.0);
    for (int i = 0; i < 2000; ++i) {
        const TrackerFeedback dir = coin(gen) ? TrackerFeedback::Up : TrackerFeedback::Down;
        const bool limit = at_limit(t, dir);
        const TrackerState next = apply_feedback(t, dir);
        CHECK(limit == (next.value == t.value));
        t = next;
    }
}

TEST_CASE("value and step stay clamped under arbitrary feedback sequences") {
    std::mt19937 gen(23);
    std::uniform_int_distribution<int> die(0, 2);
    TrackerState t = make_tracker(0.5, 4.5, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const int roll = die(gen);
        const TrackerFeedback dir = roll == 0   ? TrackerFeedback::Good
                                    : roll == 1 ? TrackerFeedback::Up
                                                : TrackerFeedback::Down;
        t = apply_feedback(t, dir);
        REQUIRE(t.value >= t.lo);
        REQUIRE(t.value <= t.hi);
        REQUIRE(t.delta >= t.delta_min);
        REQUIRE(t.delta <= t.delta_max);
    }
}

TEST_CASE("strict alternation contracts the step to its floor at log3 rate") {
    TrackerState t = make_tracker(0.0, 1.0, 0.5);
    t.delta = t.delta_max;
    t.last_direction = TrackerFeedback::Up; // every following move is a reversal
    const int budget =
        static_cast<int>(std::ceil(std::log(t.delta_max / t.delta_min) / std::log(3.0)));
    TrackerFeedback dir = TrackerFeedback::Down;
    int steps = 0;
    while (t.delta > t.delta_min && steps < budget) {
        t = apply_feedback(t, dir);
        dir = dir == TrackerFeedback::Down ? TrackerFeedback::Up : TrackerFeedback::Down;
        ++steps;
    }
    CHECK(t.delta == t.delta_min);
    CHECK(steps <= budget);
}

TEST_CASE("tracker settles into a tight band around any fixed target") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> target_dist(0.0, 1.0);
    for (int run = 0; run < 100; ++run) {
        const double target = target_dist(gen);
        TrackerState t = make_tracker(0.0, 1.0, 0.5);
        const int n = 1000;
        std::vector<double> distance;
        distance.reserve(n);
        for (int i = 0; i < n; ++i) {
            t = apply_feedback(t, compare_to(target, t.value));
            distance.push_back(std::abs(t.value - target));
        }
        // Enters the 2*delta_min band...
        const double best = *std::min_element(distance.begin(), distance.end());
        REQUIRE(best <= 2.0 * t.delta_min);
        // ...and eventually stays within the 4*delta_min band.
        int settled_from = n;
        for (int i = n - 1; i >= 0 && distance[static_cast<std::size_t>(i)] <= 4.0 * t.delta_min;
             --i) {
            settled_from = i;
        }
        REQUIRE(settled_from <= n - 100);
    }
}
