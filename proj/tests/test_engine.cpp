#include "reflex/engine.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

using namespace reflex;

namespace {

// Collects (due, seq) of every dispatched non-action event.
struct Recorder {
    std::vector<std::pair<SimTime, std::uint64_t>> seen;

    void attach(Engine &engine) {
        engine.set_handler([this](const Event &ev) { seen.emplace_back(ev.due, ev.seq); });
    }
};

} // namespace

TEST_CASE("schedule orders the queue by due time") {
    Engine engine(1);
    Recorder rec;
    rec.attach(engine);

    engine.schedule(5.0, 1, StimulusPulse{});
    auto ev = engine.step();
    REQUIRE(ev.has_value());
    CHECK(ev->due == 5.0);
    CHECK(engine.now() == 5.0);
}

TEST_CASE("simultaneous events dispatch in scheduling order") {
    Engine engine(1);
    Recorder rec;
    rec.attach(engine);

    const auto seq_a = engine.schedule(5.0, 1, StimulusPulse{});
    const auto seq_b = engine.schedule(5.0, 2, StimulusPulse{});
    REQUIRE(seq_a < seq_b);

    engine.run_until(5.0);
    REQUIRE(rec.seen.size() == 2);
    CHECK(rec.seen[0].second == seq_a);
    CHECK(rec.seen[1].second == seq_b);
}

TEST_CASE("scheduling in the past is a domain error") {
    Engine engine(1);
    engine.schedule(3.0, 1, StimulusPulse{});
    engine.step();
    REQUIRE(engine.now() == 3.0);
    CHECK_THROWS_AS(engine.schedule(2.9, 1, StimulusPulse{}), DomainError);
}

TEST_CASE("random event load dispatches in full (due, seq) sort order") {
    Engine engine(7);
    Recorder rec;
    rec.attach(engine);

    std::mt19937 gen(42);
    std::uniform_real_distribution<double> time_dist(0.0, 1000.0);
    std::uniform_int_distribution<int> repeat_dist(0, 9);

    std::vector<std::pair<SimTime, std::uint64_t>> scheduled;
    double t = 0.0;
    for (int i = 0; i < 1000; ++i) {
        // Occasionally reuse a time so tie-breaking is exercised.
        if (repeat_dist(gen) != 0 || scheduled.empty()) {
            t = time_dist(gen);
        }
        const auto seq = engine.schedule(t, 1, StimulusPulse{});
        scheduled.emplace_back(t, seq);
    }

    // Independent oracle: explicit sort by (due, seq).
    auto expected = scheduled;
    std::sort(expected.begin(), expected.end());

    engine.run_until(1000.0);
    REQUIRE(rec.seen == expected);
}

TEST_CASE("step on an empty queue returns nothing and keeps the clock") {
    Engine engine(1);
    CHECK_FALSE(engine.step().has_value());
    CHECK(engine.now() == 0.0);

    engine.schedule(3.0, 1, StimulusPulse{});
    engine.step();
    CHECK(engine.now() == 3.0);
    CHECK_FALSE(engine.step().has_value());
    CHECK(engine.now() == 3.0);
}

TEST_CASE("periodic action ticks exactly on the arithmetic grid") {
    Engine engine(1);
    std::vector<SimTime> ticks;
    engine.add_action(1, 10.0, [&](SimTime t) { ticks.push_back(t); }, 10.0);
    engine.run_until(100.0);

    // Oracle: n = floor((t_end - first_due) / interval) + 1.
    const int expected = static_cast<int>((100.0 - 10.0) / 10.0) + 1;
    REQUIRE(static_cast<int>(ticks.size()) == expected);
    for (int i = 0; i < expected; ++i) {
        CHECK(ticks[static_cast<std::size_t>(i)] == Catch::Approx(10.0 * (i + 1)));
    }
}

TEST_CASE("run_until dispatches everything due and parks the clock") {
    Engine engine(1);
    CHECK(engine.run_until(0.0) == 0);
    CHECK(engine.now() == 0.0);

    Recorder rec;
    rec.attach(engine);
    engine.schedule(1.0, 1, StimulusPulse{});
    engine.schedule(2.0, 1, StimulusPulse{});
    engine.schedule(3.0, 1, StimulusPulse{});
    CHECK(engine.run_until(2.0) == 2);
    CHECK(engine.now() == 2.0);
    CHECK(engine.pending() == 1);

    CHECK_THROWS_AS(engine.run_until(1.0), DomainError);
}

TEST_CASE("mixed periodic and one-shot load matches a naive replay oracle") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> time_dist(0.0, 500.0);
    std::uniform_real_distribution<double> interval_dist(1.0, 50.0);
    const double t_end = 400.0;

    Engine engine(3);
    std::size_t action_ticks = 0;
    std::size_t handled = 0;
    engine.set_handler([&](const Event &) { ++handled; });

    std::vector<double> one_shots;
    std::vector<std::pair<double, double>> periodics; // (first_due, interval)
    for (int i = 0; i < 50; ++i) {
        one_shots.push_back(time_dist(gen));
        engine.schedule(one_shots.back(), 1, StimulusPulse{});
    }
    for (int i = 0; i < 10; ++i) {
        const double first = time_dist(gen);
        const double interval = interval_dist(gen);
        periodics.emplace_back(first, interval);
        engine.add_action(1, first, [&](SimTime) { ++action_ticks; }, interval);
    }

    engine.run_until(t_end);

    // Independent replay: list scan instead of a queue.
    std::size_t expected = 0;
    for (double due : one_shots) {
        if (due <= t_end) {
            ++expected;
        }
    }
    std::size_t expected_ticks = 0;
    for (auto [first, interval] : periodics) {
        for (double t = first; t <= t_end; t += interval) {
            ++expected_ticks;
        }
    }
    CHECK(handled == expected);
    CHECK(action_ticks == expected_ticks);
}

TEST_CASE("dispatch sequence is deterministic across identical runs") {
    auto run = [](std::uint64_t seed) {
        Engine engine(seed);
        Recorder rec;
        rec.attach(engine);
        std::mt19937 gen(11);
        std::uniform_real_distribution<double> time_dist(0.0, 100.0);
        for (int i = 0; i < 200; ++i) {
            engine.schedule(time_dist(gen), 1, StimulusPulse{});
        }
        engine.run_until(100.0);
        return rec.seen;
    };
    CHECK(run(5) == run(5));
}

TEST_CASE("clock never decreases over any step/run_until sequence") {
    Engine engine(1);
    std::mt19937 gen(13);
    std::uniform_real_distribution<double> ahead(0.0, 20.0);
    double watermark = 0.0;
    for (int i = 0; i < 300; ++i) {
        const int op = static_cast<int>(gen() % 3);
        if (op == 0) {
            engine.schedule(engine.now() + ahead(gen), 1, StimulusPulse{});
        } else if (op == 1) {
            engine.step();
        } else {
            engine.run_until(engine.now() + ahead(gen) * 0.2);
        }
        CHECK(engine.now() >= watermark);
        watermark = engine.now();
    }
}

TEST_CASE("one-shot actions fire once and cancelled actions never fire") {
    Engine engine(1);
    int fired = 0;
    engine.add_action(1, 5.0, [&](SimTime) { ++fired; });
    const ActionId doomed = engine.add_action(1, 6.0, [&](SimTime) { ++fired; });
    engine.cancel_action(doomed);
    engine.run_until(50.0);
    CHECK(fired == 1);
}
