#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace reflex {

// Simulation time in milliseconds.
using SimTime = double;

using AgentId = std::uint32_t;
using LinkId = std::uint64_t;
using ActionId = std::uint64_t;

enum class NeuronRole : std::uint8_t { Afferent, Interneuron, Motoneuron };

enum class SynapseSign : std::uint8_t { Excitatory, Inhibitory };

// Half-open observation window [begin, end).
struct TimeWindow {
    SimTime begin = 0.0;
    SimTime end = 0.0;

    bool contains(SimTime t) const { return t >= begin && t < end; }
};

// Thrown when an operation's precondition is violated; signals a logic bug
// in the caller (e.g. scheduling an event in the past), not an I/O problem.
class DomainError : public std::logic_error {
public:
    explicit DomainError(const std::string &what) : std::logic_error(what) {}
};

inline const char *to_string(NeuronRole role) {
    switch (role) {
    case NeuronRole::Afferent: return "afferent";
    case NeuronRole::Interneuron: return "interneuron";
    case NeuronRole::Motoneuron: return "motoneuron";
    }
    return "?";
}

inline const char *to_string(SynapseSign sign) {
    return sign == SynapseSign::Excitatory ? "excitatory" : "inhibitory";
}

} // namespace reflex
