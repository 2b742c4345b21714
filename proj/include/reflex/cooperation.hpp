#pragma once

#include "reflex/feedback.hpp"
#include "reflex/network.hpp"
#include "reflex/rng.hpp"
#include "reflex/tracker.hpp"
#include "reflex/types.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace reflex {

struct SelfOrgParams {
    int k_tune = 5;             // exhausted tuning attempts before reorganizing
    int k_reorg = 3;            // failed reorganizations before evolving
    int max_hops = 4;           // feedback propagation depth bound
    double epsilon = 0.05;      // relative tolerance band defining "good"
    std::size_t n_max = 32;     // hard cap on neuron count
    double w_init = 2.0;        // weight of links created by reorganization
    double w_min = 0.0;         // bounds for links created at runtime
    double w_max = 20.0;
    double horizon_ms = 1000.0; // feedback memory horizon
    double hop_decay = 0.5;     // criticality decay per hop
    double delay_min = 1.0;     // conduction delay range for created links
    double delay_max = 5.0;
    bool always_propagate = false; // propagate on every NCS, not only when tuning is exhausted
};

// The four-level behavior ladder. Nominal behavior is the absence of any of
// these; the rest escalate strictly in this order.
enum class BehaviorAction : std::uint8_t { NoAction, Tune, Propagate, Reorganize, Evolve };

inline const char *to_string(BehaviorAction a) {
    switch (a) {
    case BehaviorAction::NoAction: return "no_action";
    case BehaviorAction::Tune: return "tune";
    case BehaviorAction::Propagate: return "propagate";
    case BehaviorAction::Reorganize: return "reorganize";
    case BehaviorAction::Evolve: return "evolve";
    }
    return "?";
}

struct LadderKey {
    NcsKind kind = NcsKind::InstantFrequency;
    ErrorDirection direction = ErrorDirection::TooLow;

    bool operator<(const LadderKey &o) const {
        return std::tie(kind, direction) < std::tie(o.kind, o.direction);
    }
};

struct LadderCounters {
    int tune_exhausted = 0;
    int reorg_failed = 0;
};

// Escalation state of one agent, per NCS kind and direction.
using LadderState = std::map<LadderKey, LadderCounters>;

// Which way a link's weight must move to serve a demand: an excitatory input
// grows when more drive is needed; an inhibitory one does the opposite.
inline TrackerFeedback tune_direction(SynapseSign sign, ErrorDirection demand) {
    const bool up = (demand == ErrorDirection::TooLow) == (sign == SynapseSign::Excitatory);
    return up ? TrackerFeedback::Up : TrackerFeedback::Down;
}

inline bool can_tune(const Network &net, AgentId agent, ErrorDirection demand) {
    for (LinkId l : net.in_links(agent)) {
        const SynapseLink &link = net.link(l);
        if (!at_limit(link.weight, tune_direction(link.sign, demand))) {
            return true;
        }
    }
    return false;
}

// One step of the ladder state machine. Tuning is chosen as long as any
// incoming weight can still move; each feedback that finds every tracker
// pinned counts one exhausted attempt and is answered by propagation. After
// k_tune consecutive exhausted attempts the agent reorganizes, and after
// k_reorg failed reorganizations it evolves. A Good observation clears all
// failure counters.
inline BehaviorAction handle_feedback(const Network &net, LadderState &ladder, AgentId agent,
                                      const Feedback &fb, const SelfOrgParams &params) {
    if (fb.is_good()) {
        ladder.clear();
        return BehaviorAction::NoAction;
    }
    const ErrorDirection demand = fb.ncs->direction;
    if (can_tune(net, agent, demand)) {
        return BehaviorAction::Tune;
    }
    LadderCounters &c = ladder[LadderKey{fb.ncs->kind, demand}];
    if (c.tune_exhausted >= params.k_tune) {
        return c.reorg_failed >= params.k_reorg ? BehaviorAction::Evolve
                                                : BehaviorAction::Reorganize;
    }
    ++c.tune_exhausted;
    return BehaviorAction::Propagate;
}

// A neuron holding a downstream demand checks its own depolarization over the
// demand window. Starving below threshold while more output is wanted is a
// TooLow NCS; having fired at all while less output is wanted is a TooHigh
// one. Anything else is good and produces nothing.
inline std::optional<Ncs> detect_depolarization_ncs(const Network &net, AgentId agent,
                                                    const Feedback &demand, SimTime) {
    if (demand.is_good()) {
        return std::nullopt;
    }
    const TimeWindow &window = demand.ncs->window;
    const NeuronState &state = net.neuron(agent).state;
    if (demand.ncs->direction == ErrorDirection::TooLow) {
        const double peak = net.peak_depolarization_in(agent, window);
        if (peak >= state.theta) {
            return std::nullopt;
        }
        Ncs ncs;
        ncs.kind = NcsKind::Depolarization;
        ncs.direction = ErrorDirection::TooLow;
        ncs.magnitude = std::min(1.0, (state.theta - peak) / (state.theta - state.v_rest));
        ncs.origin = agent;
        ncs.window = window;
        return ncs;
    }
    if (net.spike_count_in(agent, window) == 0) {
        return std::nullopt;
    }
    Ncs ncs;
    ncs.kind = NcsKind::Depolarization;
    ncs.direction = ErrorDirection::TooHigh;
    ncs.magnitude = demand.ncs->magnitude;
    ncs.origin = agent;
    ncs.window = window;
    return ncs;
}

// Retro-propagates an NCS one hop upstream: one feedback per incoming link,
// criticality decayed by the hop count. Nothing is emitted once the hop
// budget is spent.
inline std::vector<std::pair<AgentId, Feedback>>
propagate_feedback(const Network &net, AgentId agent, const Ncs &ncs, int parent_hops,
                   const SelfOrgParams &params) {
    const int hops = parent_hops + 1;
    if (hops > params.max_hops) {
        return {};
    }
    std::vector<std::pair<AgentId, Feedback>> out;
    for (LinkId l : net.in_links(agent)) {
        Feedback fb;
        fb.ncs = ncs;
        fb.hops = hops;
        fb.criticality = ncs.magnitude * std::pow(params.hop_decay, static_cast<double>(hops));
        fb.sender = agent;
        out.emplace_back(net.link(l).pre, fb);
    }
    return out;
}

struct ReorganizeOutcome {
    enum class Action : std::uint8_t { None, AddLink, RemoveLink, FlipLink };
    bool ok = false;
    Action action = Action::None;
    LinkId link = 0;
    AgentId pre = 0;
    double weight = 0.0;
    std::string reason;
};

inline const char *to_string(ReorganizeOutcome::Action a) {
    switch (a) {
    case ReorganizeOutcome::Action::None: return "none";
    case ReorganizeOutcome::Action::AddLink: return "add_link";
    case ReorganizeOutcome::Action::RemoveLink: return "remove_link";
    case ReorganizeOutcome::Action::FlipLink: return "flip_link";
    }
    return "?";
}

// "Fire together, wire together": for a TooLow demand, recruit an excitatory
// link from the neuron most co-active within the demand window (ties to the
// smallest id). For TooHigh, drop the weakest recently-active excitatory
// input, or flip it to inhibitory while its weight is still above w_min.
inline ReorganizeOutcome reorganize(Network &net, Rng &rng, AgentId agent, const Ncs &ncs,
                                    const SelfOrgParams &params) {
    ReorganizeOutcome out;
    if (ncs.direction == ErrorDirection::TooLow) {
        const auto incoming = net.in_links(agent);
        AgentId best = 0;
        std::size_t best_count = 0;
        for (const auto &[id, candidate] : net.neurons()) {
            if (id == agent) {
                continue;
            }
            const bool already_pre =
                std::any_of(incoming.begin(), incoming.end(),
                            [&](LinkId l) { return net.link(l).pre == id; });
            if (already_pre) {
                continue;
            }
            const std::size_t count = net.spike_count_in(id, ncs.window);
            if (count > 0 && (best == 0 || count > best_count)) {
                best = id;
                best_count = count;
            }
        }
        if (best == 0) {
            out.reason = "no co-active candidate";
            return out;
        }
        const double delay = rng.uniform(params.delay_min, params.delay_max);
        out.link = net.add_link(best, agent, SynapseSign::Excitatory, params.w_init,
                                params.w_min, params.w_max, delay);
        out.ok = true;
        out.action = ReorganizeOutcome::Action::AddLink;
        out.pre = best;
        out.weight = params.w_init;
        return out;
    }

    // TooHigh: prefer inputs whose presynaptic side was active in the window.
    std::vector<LinkId> active;
    std::vector<LinkId> all_excitatory;
    for (LinkId l : net.in_links(agent)) {
        const SynapseLink &link = net.link(l);
        if (link.sign != SynapseSign::Excitatory) {
            continue;
        }
        all_excitatory.push_back(l);
        if (net.spike_count_in(link.pre, ncs.window) > 0) {
            active.push_back(l);
        }
    }
    const std::vector<LinkId> &pool = active.empty() ? all_excitatory : active;
    if (pool.empty()) {
        out.reason = "no excitatory input to weaken";
        return out;
    }
    LinkId weakest = pool.front();
    for (LinkId l : pool) {
        if (net.link(l).weight_mv() < net.link(weakest).weight_mv()) {
            weakest = l;
        }
    }
    SynapseLink &victim = net.link(weakest);
    out.ok = true;
    out.link = weakest;
    out.pre = victim.pre;
    out.weight = victim.weight_mv();
    if (victim.weight_mv() <= victim.weight.lo) {
        net.remove_link(weakest);
        out.action = ReorganizeOutcome::Action::RemoveLink;
    } else {
        victim.sign = SynapseSign::Inhibitory;
        out.action = ReorganizeOutcome::Action::FlipLink;
    }
    return out;
}

struct EvolveOutcome {
    enum class Action : std::uint8_t { None, CreateInterneuron, Refused };
    Action action = Action::None;
    AgentId created = 0;
    AgentId afferent = 0;
    LinkId link_in = 0;
    LinkId link_out = 0;
    std::string reason;
};

// Last rung: nobody suitable exists, so make somebody. A new interneuron is
// wired from the most stimulus-correlated afferent into the demanding agent,
// both links at w_init. Refused at the population cap.
inline EvolveOutcome evolve(Network &net, Rng &rng, AgentId agent, const Ncs &ncs,
                            const NeuronState &interneuron_proto, const SelfOrgParams &params) {
    EvolveOutcome out;
    if (ncs.direction == ErrorDirection::TooHigh) {
        out.action = EvolveOutcome::Action::Refused;
        out.reason = "no evolution defined for excess output";
        return out;
    }
    if (net.neuron_count() >= params.n_max) {
        out.action = EvolveOutcome::Action::Refused;
        out.reason = "network size cap reached";
        return out;
    }
    AgentId best_afferent = 0;
    std::size_t best_count = 0;
    for (const auto &[id, candidate] : net.neurons()) {
        if (candidate.state.role != NeuronRole::Afferent) {
            continue;
        }
        const std::size_t count = net.spike_count_in(id, ncs.window);
        if (best_afferent == 0 || count > best_count) {
            best_afferent = id;
            best_count = count;
        }
    }
    if (best_afferent == 0) {
        out.action = EvolveOutcome::Action::Refused;
        out.reason = "no afferent to wire from";
        return out;
    }
    NeuronState proto = interneuron_proto;
    proto.role = NeuronRole::Interneuron;
    proto.v = proto.v_rest;
    const AgentId created = net.add_neuron(proto);
    const double d_in = rng.uniform(params.delay_min, params.delay_max);
    const double d_out = rng.uniform(params.delay_min, params.delay_max);
    out.link_in = net.add_link(best_afferent, created, SynapseSign::Excitatory, params.w_init,
                               params.w_min, params.w_max, d_in);
    out.link_out = net.add_link(created, agent, SynapseSign::Excitatory, params.w_init,
                                params.w_min, params.w_max, d_out);
    out.action = EvolveOutcome::Action::CreateInterneuron;
    out.created = created;
    out.afferent = best_afferent;
    return out;
}

struct Retirement {
    AgentId agent = 0;
    std::size_t links_removed = 0;
};

// An interneuron whose outgoing links have all been removed serves nobody;
// it accepts to disappear.
inline std::vector<Retirement> retire_useless_interneurons(Network &net) {
    std::vector<AgentId> useless;
    for (const auto &[id, agent] : net.neurons()) {
        if (agent.state.role == NeuronRole::Interneuron && net.out_links(id).empty()) {
            useless.push_back(id);
        }
    }
    std::vector<Retirement> out;
    for (AgentId id : useless) {
        Retirement r;
        r.agent = id;
        r.links_removed = net.in_links(id).size();
        net.remove_neuron(id);
        out.push_back(r);
    }
    return out;
}

} // namespace reflex
