#pragma once

#include "reflex/feedback.hpp"
#include "reflex/types.hpp"

#include <cstdint>
#include <variant>

namespace reflex {

// A presynaptic spike arriving at the postsynaptic end of `link`. The PSP
// amplitude is resolved at delivery time so weight changes made while the
// spike was in flight take effect; a deleted link swallows the delivery.
struct SpikeDelivery {
    AgentId pre = 0;
    LinkId link = 0;
};

// Experimental pulse forcing an afferent to fire.
struct StimulusPulse {};

struct FeedbackDelivery {
    Feedback feedback;
};

// Tick of a registered one-shot or periodic action.
struct ActionTick {
    ActionId action = 0;
};

// Motoneuron output reaching the muscle after the neuromuscular delay.
struct MuscleDischarge {
    AgentId motoneuron = 0;
};

using EventPayload =
    std::variant<SpikeDelivery, StimulusPulse, FeedbackDelivery, ActionTick, MuscleDischarge>;

struct Event {
    SimTime due = 0.0;
    std::uint64_t seq = 0; // assigned at scheduling; unique per engine
    AgentId target = 0;
    EventPayload payload;
};

// (due, seq) totally orders any event set; seq breaks simultaneous ties in
// scheduling order so dispatch never depends on container internals.
struct EventAfter {
    bool operator()(const Event &a, const Event &b) const {
        if (a.due != b.due) {
            return a.due > b.due;
        }
        return a.seq > b.seq;
    }
};

// An event an operation wants scheduled; the engine assigns the sequence
// number when it is actually enqueued.
struct Dispatch {
    SimTime due = 0.0;
    AgentId target = 0;
    EventPayload payload;
};

} // namespace reflex
