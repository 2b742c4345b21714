#pragma once

#include "reflex/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace reflex {

enum class NcsKind : std::uint8_t { Depolarization, InstantFrequency };

enum class ErrorDirection : std::uint8_t { TooLow, TooHigh };

// A non-cooperative situation: a locally detected harmful observation. A
// "good" observation is never an NCS; it travels as a Feedback without one.
struct Ncs {
    NcsKind kind = NcsKind::InstantFrequency;
    ErrorDirection direction = ErrorDirection::TooLow;
    double magnitude = 0.0; // normalized error in [0, 1]
    AgentId origin = 0;
    TimeWindow window;
};

// Cooperative repair message retro-propagated from an annoyed agent toward
// the agents feeding it. Criticality decays with each hop so distant
// complaints weigh less than local ones.
struct Feedback {
    std::optional<Ncs> ncs; // empty == Good observation
    double criticality = 0.0;
    int hops = 0;
    AgentId sender = 0;

    bool is_good() const { return !ncs.has_value(); }

    static Feedback good(AgentId sender) {
        Feedback fb;
        fb.sender = sender;
        return fb;
    }
};

inline const char *to_string(NcsKind kind) {
    return kind == NcsKind::Depolarization ? "depolarization" : "instant_frequency";
}

inline const char *to_string(ErrorDirection dir) {
    return dir == ErrorDirection::TooLow ? "too_low" : "too_high";
}

// Bounded per-agent memory of received feedbacks. Entries expire once they
// are older than the horizon; `serviced` marks entries the agent has already
// acted upon within the current cooperation exchange.
class AgentMemory {
public:
    struct Entry {
        Feedback feedback;
        SimTime received = 0.0;
        std::uint64_t order = 0;
        bool serviced = false;
    };

    explicit AgentMemory(double horizon_ms = 1000.0) : horizon_(horizon_ms) {}

    double horizon() const { return horizon_; }

    void memorize(const Feedback &fb, SimTime t) {
        forget(t);
        entries_.push_back(Entry{fb, t, next_order_++, false});
    }

    // Drops entries older than the horizon; idempotent.
    void forget(SimTime t) {
        std::erase_if(entries_, [&](const Entry &e) { return t - e.received > horizon_; });
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    const std::vector<Entry> &entries() const { return entries_; }

    bool has_unserviced() const {
        return std::any_of(entries_.begin(), entries_.end(),
                           [](const Entry &e) { return !e.serviced; });
    }

    // The unserviced entry with the highest criticality; ties go to the
    // earliest-received entry. Returns nullptr when nothing is pending.
    const Entry *most_critical_unserviced() const {
        const Entry *best = nullptr;
        for (const auto &e : entries_) {
            if (e.serviced) {
                continue;
            }
            if (best == nullptr || e.feedback.criticality > best->feedback.criticality) {
                best = &e;
            }
        }
        return best;
    }

    void mark_all_serviced() {
        for (auto &e : entries_) {
            e.serviced = true;
        }
    }

    void clear() { entries_.clear(); }

private:
    double horizon_;
    std::vector<Entry> entries_;
    std::uint64_t next_order_ = 0;
};

// Degree of annoyance in [0, 1]: the worst live complaint, discounted by how
// far it travelled. An empty memory is a fully satisfied agent.
inline double compute_criticality(const AgentMemory &memory, SimTime t, double hop_decay) {
    double worst = 0.0;
    for (const auto &e : memory.entries()) {
        if (t - e.received > memory.horizon()) {
            continue;
        }
        if (!e.feedback.ncs.has_value()) {
            continue;
        }
        const double c =
            e.feedback.ncs->magnitude * std::pow(hop_decay, static_cast<double>(e.feedback.hops));
        worst = std::max(worst, c);
    }
    return worst;
}

// The most annoyed agent wins; ties break toward the smallest id so the
// choice is reproducible.
inline AgentId select_helpee(std::span<const std::pair<AgentId, double>> candidates) {
    if (candidates.empty()) {
        throw DomainError("select_helpee: no candidates");
    }
    AgentId best_id = candidates.front().first;
    double best_crit = candidates.front().second;
    for (const auto &[id, crit] : candidates.subspan(1)) {
        if (crit > best_crit || (crit == best_crit && id < best_id)) {
            best_id = id;
            best_crit = crit;
        }
    }
    return best_id;
}

} // namespace reflex
