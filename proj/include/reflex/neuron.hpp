#pragma once

#include "reflex/types.hpp"

#include <cmath>
#include <optional>

namespace reflex {

// Leaky integrate-and-fire state. PSPs arrive as instantaneous jumps; between
// events the potential relaxes exponentially toward rest. Nothing here is
// time-stepped: decay is evaluated lazily from the elapsed interval, so the
// trajectory is exact at every observation point.
struct NeuronState {
    double v = -70.0;            // membrane potential, mV
    double v_rest = -70.0;       // resting potential, mV
    double theta = -55.0;        // firing threshold, mV
    double tau_m = 10.0;         // membrane time constant, ms
    double t_refractory = 3.0;   // absolute refractory period, ms
    SimTime last_update = 0.0;
    std::optional<SimTime> last_spike;
    NeuronRole role = NeuronRole::Interneuron;
};

inline bool in_refractory(const NeuronState &n, SimTime t) {
    return n.last_spike.has_value() && t - *n.last_spike <= n.t_refractory;
}

// Relaxes the membrane toward rest over [last_update, t]. During the absolute
// refractory window the potential is pinned at rest, and anything injected
// inside the window is gone by the time the window ends, so a decay segment
// that starts inside it always lands on v_rest.
inline NeuronState decay_to(NeuronState n, SimTime t) {
    if (t < n.last_update) {
        throw DomainError("decay_to: time runs backwards");
    }
    if (t == n.last_update) {
        return n;
    }
    if (n.last_spike.has_value() && n.last_update <= *n.last_spike + n.t_refractory) {
        n.v = n.v_rest;
    } else {
        n.v = n.v_rest + (n.v - n.v_rest) * std::exp(-(t - n.last_update) / n.tau_m);
    }
    n.last_update = t;
    return n;
}

struct PspResult {
    NeuronState state;
    bool spiked = false;
    double v_after_jump = 0.0; // potential right after the PSP, before any reset
};

// Applies one PSP at time t: decay first, then the jump, then the threshold
// test. A spike resets the potential to rest and stamps the refractory
// window; no spike can occur while a previous window is still open.
inline PspResult receive_psp(NeuronState n, double weight_mv, SynapseSign sign, SimTime t) {
    n = decay_to(n, t);
    n.v += sign == SynapseSign::Excitatory ? weight_mv : -weight_mv;

    PspResult out;
    out.v_after_jump = n.v;
    if (n.v >= n.theta && !in_refractory(n, t)) {
        n.v = n.v_rest;
        n.last_spike = t;
        out.spiked = true;
    }
    out.state = n;
    return out;
}

} // namespace reflex
