#pragma once

#include "reflex/types.hpp"

#include <algorithm>
#include <optional>

namespace reflex {

enum class TrackerFeedback : std::uint8_t { Up, Down, Good };

// Bounded one-dimensional search state: the step grows while feedback keeps
// pointing the same way and shrinks on reversal, so the value homes in on a
// target that may itself drift over time.
struct TrackerState {
    double value = 0.0;
    double lo = 0.0;
    double hi = 1.0;
    double delta = 0.0;
    double delta_min = 0.0;
    double delta_max = 0.0;
    std::optional<TrackerFeedback> last_direction;
};

// Step-size policy: x2 when a direction repeats, /3 on reversal, /2 on Good.
inline constexpr double kTrackerGrow = 2.0;
inline constexpr double kTrackerShrinkReverse = 3.0;
inline constexpr double kTrackerShrinkGood = 2.0;

inline TrackerState make_tracker(double lo, double hi, double value) {
    if (!(lo < hi)) {
        throw DomainError("tracker: lo must be < hi");
    }
    const double span = hi - lo;
    TrackerState t;
    t.lo = lo;
    t.hi = hi;
    t.value = std::clamp(value, lo, hi);
    t.delta_min = span / 1e4;
    t.delta_max = span / 2.0;
    t.delta = span / 8.0;
    return t;
}

// True iff a move in `dir` cannot change the value; bound contact alone
// decides, the current step size is irrelevant.
inline bool at_limit(const TrackerState &t, TrackerFeedback dir) {
    if (dir == TrackerFeedback::Up) {
        return t.value >= t.hi;
    }
    if (dir == TrackerFeedback::Down) {
        return t.value <= t.lo;
    }
    return false;
}

inline TrackerState apply_feedback(TrackerState t, TrackerFeedback dir) {
    if (dir == TrackerFeedback::Good) {
        t.delta = std::max(t.delta_min, t.delta / kTrackerShrinkGood);
        t.last_direction.reset();
        return t;
    }

    if (dir == TrackerFeedback::Up) {
        t.value = std::min(t.hi, t.value + t.delta);
    } else {
        t.value = std::max(t.lo, t.value - t.delta);
    }

    if (t.last_direction == dir) {
        t.delta = std::min(t.delta_max, t.delta * kTrackerGrow);
    } else if (t.last_direction.has_value()) {
        t.delta = std::max(t.delta_min, t.delta / kTrackerShrinkReverse);
    }
    t.last_direction = dir;
    return t;
}

} // namespace reflex
