#pragma once

#include "reflex/events.hpp"
#include "reflex/feedback.hpp"
#include "reflex/neuron.hpp"
#include "reflex/tracker.hpp"
#include "reflex/types.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace reflex {

// Muscle output lags the motoneuron spike by a fixed neuromuscular delay.
inline constexpr SimTime kNeuromuscularDelayMs = 1.0;

// Directed, weighted, delayed connection. The weight doubles as the tracker
// the tuning behavior moves; its bounds are the tunable interval.
struct SynapseLink {
    LinkId id = 0;
    AgentId pre = 0;
    AgentId post = 0;
    SynapseSign sign = SynapseSign::Excitatory;
    double delay = 1.0; // ms, strictly positive: no zero-latency cycles
    TrackerState weight;

    double weight_mv() const { return weight.value; }
};

struct MuscleState {
    std::vector<AgentId> innervating;
    std::vector<SimTime> discharge_log; // strictly increasing
};

// Generates exactly `count` pulses at onset + k*interval for each target.
struct StimulusProtocol {
    SimTime onset = 0.0;
    double interval = 100.0;
    int count = 1;
    std::vector<AgentId> targets;
};

struct NeuronAgent {
    AgentId id = 0;
    NeuronState state;
    std::vector<SimTime> spikes;
    // Post-PSP membrane samples, the basis for peak-depolarization queries.
    std::vector<std::pair<SimTime, double>> depol_log;
    AgentMemory memory;
};

// The cell/connector graph plus all per-agent physiology logs. All mutation
// after seal_construction() is counted, so a run can be audited against its
// organization event log.
class Network {
public:
    using SpikeSink = std::function<void(AgentId, SimTime)>;

    explicit Network(double memory_horizon_ms = 1000.0) : horizon_(memory_horizon_ms) {}

    // --- construction / topology -----------------------------------------

    AgentId add_neuron(AgentId id, const NeuronState &proto) {
        if (id == 0 || neurons_.count(id) != 0 || muscles_.count(id) != 0) {
            throw DomainError("add_neuron: id unusable: " + std::to_string(id));
        }
        NeuronAgent agent;
        agent.id = id;
        agent.state = proto;
        agent.memory = AgentMemory(horizon_);
        neurons_.emplace(id, std::move(agent));
        next_agent_ = std::max(next_agent_, id + 1);
        if (sealed_) {
            ++topology_mutations_;
        }
        return id;
    }

    AgentId add_neuron(const NeuronState &proto) { return add_neuron(next_agent_, proto); }

    AgentId add_muscle(AgentId id, std::vector<AgentId> innervating) {
        if (id == 0 || neurons_.count(id) != 0 || muscles_.count(id) != 0) {
            throw DomainError("add_muscle: id unusable: " + std::to_string(id));
        }
        for (AgentId m : innervating) {
            if (!is_role(m, NeuronRole::Motoneuron)) {
                throw DomainError("add_muscle: innervating id is not a motoneuron");
            }
        }
        muscles_.emplace(id, MuscleState{std::move(innervating), {}});
        next_agent_ = std::max(next_agent_, id + 1);
        return id;
    }

    LinkId add_link(AgentId pre, AgentId post, SynapseSign sign, double weight, double w_min,
                    double w_max, double delay) {
        if (!has_neuron(pre) || !has_neuron(post)) {
            throw DomainError("add_link: endpoint is not a neuron");
        }
        if (!(delay > 0.0)) {
            throw DomainError("add_link: delay must be strictly positive");
        }
        if (w_min < 0.0 || !(w_min < w_max) || weight < w_min || weight > w_max) {
            throw DomainError("add_link: weight outside [w_min, w_max]");
        }
        const LinkId id = next_link_++;
        SynapseLink link;
        link.id = id;
        link.pre = pre;
        link.post = post;
        link.sign = sign;
        link.delay = delay;
        link.weight = make_tracker(w_min, w_max, weight);
        links_.emplace(id, std::move(link));
        out_[pre].push_back(id);
        in_[post].push_back(id);
        if (sealed_) {
            ++topology_mutations_;
        }
        return id;
    }

    void remove_link(LinkId id) {
        auto it = links_.find(id);
        if (it == links_.end()) {
            throw DomainError("remove_link: unknown link");
        }
        std::erase(out_[it->second.pre], id);
        std::erase(in_[it->second.post], id);
        links_.erase(it);
        if (sealed_) {
            ++topology_mutations_;
        }
    }

    void remove_neuron(AgentId id) {
        auto it = neurons_.find(id);
        if (it == neurons_.end()) {
            throw DomainError("remove_neuron: unknown neuron");
        }
        std::vector<LinkId> incident = in_links(id);
        const std::vector<LinkId> outgoing = out_links(id);
        incident.insert(incident.end(), outgoing.begin(), outgoing.end());
        for (LinkId l : incident) {
            remove_link(l);
        }
        neurons_.erase(it);
        for (auto &[mid, muscle] : muscles_) {
            std::erase(muscle.innervating, id);
        }
        if (sealed_) {
            ++topology_mutations_;
        }
    }

    void seal_construction() { sealed_ = true; }
    std::uint64_t topology_mutations() const { return topology_mutations_; }

    // --- queries ----------------------------------------------------------

    bool has_neuron(AgentId id) const { return neurons_.count(id) != 0; }
    bool has_muscle(AgentId id) const { return muscles_.count(id) != 0; }
    bool has_link(LinkId id) const { return links_.count(id) != 0; }

    NeuronAgent &neuron(AgentId id) {
        auto it = neurons_.find(id);
        if (it == neurons_.end()) {
            throw DomainError("neuron: unknown agent " + std::to_string(id));
        }
        return it->second;
    }
    const NeuronAgent &neuron(AgentId id) const { return const_cast<Network *>(this)->neuron(id); }

    MuscleState &muscle(AgentId id) {
        auto it = muscles_.find(id);
        if (it == muscles_.end()) {
            throw DomainError("muscle: unknown agent " + std::to_string(id));
        }
        return it->second;
    }
    const MuscleState &muscle(AgentId id) const { return const_cast<Network *>(this)->muscle(id); }

    SynapseLink &link(LinkId id) {
        auto it = links_.find(id);
        if (it == links_.end()) {
            throw DomainError("link: unknown link " + std::to_string(id));
        }
        return it->second;
    }
    const SynapseLink &link(LinkId id) const { return const_cast<Network *>(this)->link(id); }

    const std::map<AgentId, NeuronAgent> &neurons() const { return neurons_; }
    const std::map<AgentId, MuscleState> &muscles() const { return muscles_; }
    const std::map<LinkId, SynapseLink> &links() const { return links_; }

    std::vector<LinkId> in_links(AgentId id) const {
        auto it = in_.find(id);
        return it == in_.end() ? std::vector<LinkId>{} : it->second;
    }
    std::vector<LinkId> out_links(AgentId id) const {
        auto it = out_.find(id);
        return it == out_.end() ? std::vector<LinkId>{} : it->second;
    }

    bool is_role(AgentId id, NeuronRole role) const {
        auto it = neurons_.find(id);
        return it != neurons_.end() && it->second.state.role == role;
    }

    std::size_t neuron_count() const { return neurons_.size(); }

    std::size_t spike_count_in(AgentId id, const TimeWindow &w) const {
        const auto &log = neuron(id).spikes;
        return static_cast<std::size_t>(std::count_if(
            log.begin(), log.end(), [&](SimTime t) { return w.contains(t); }));
    }

    // Peak post-PSP depolarization inside the window; rest if nothing arrived.
    double peak_depolarization_in(AgentId id, const TimeWindow &w) const {
        const auto &agent = neuron(id);
        double peak = agent.state.v_rest;
        for (const auto &[t, v] : agent.depol_log) {
            if (w.contains(t)) {
                peak = std::max(peak, v);
            }
        }
        return peak;
    }

    void set_spike_sink(SpikeSink sink) { spike_sink_ = std::move(sink); }

    // --- operations -------------------------------------------------------

    // Emits one delivery per outgoing link at t + delay, plus the delayed
    // muscle discharge when a motoneuron fires. Appends to the spike log.
    std::vector<Dispatch> fire(AgentId id, SimTime t) {
        NeuronAgent &agent = neuron(id);
        agent.spikes.push_back(t);
        if (spike_sink_) {
            spike_sink_(id, t);
        }
        std::vector<Dispatch> out;
        for (LinkId l : out_links(id)) {
            const SynapseLink &ln = link(l);
            out.push_back(Dispatch{t + ln.delay, ln.post, SpikeDelivery{id, l}});
        }
        if (agent.state.role == NeuronRole::Motoneuron) {
            for (const auto &[mid, muscle] : muscles_) {
                if (std::find(muscle.innervating.begin(), muscle.innervating.end(), id) !=
                    muscle.innervating.end()) {
                    out.push_back(Dispatch{t + kNeuromuscularDelayMs, mid, MuscleDischarge{id}});
                }
            }
        }
        return out;
    }

    // Stimulus-driven firing: the pulse forces a spike unless the cell is
    // still absolutely refractory.
    std::vector<Dispatch> force_fire(AgentId id, SimTime t) {
        NeuronAgent &agent = neuron(id);
        if (in_refractory(agent.state, t)) {
            return {};
        }
        agent.state = decay_to(agent.state, t);
        agent.state.v = agent.state.v_rest;
        agent.state.last_spike = t;
        agent.depol_log.emplace_back(t, agent.state.theta);
        return fire(id, t);
    }

    // One spike arriving over `link`. A link deleted while the spike was in
    // flight swallows the delivery.
    std::vector<Dispatch> deliver_psp(LinkId link_id, SimTime t) {
        auto it = links_.find(link_id);
        if (it == links_.end()) {
            return {};
        }
        const SynapseLink &ln = it->second;
        NeuronAgent &agent = neuron(ln.post);
        PspResult res = receive_psp(agent.state, ln.weight_mv(), ln.sign, t);
        agent.state = res.state;
        agent.depol_log.emplace_back(t, res.v_after_jump);
        if (res.spiked) {
            return fire(ln.post, t);
        }
        return {};
    }

    // Expands the protocol into pulse events: count pulses per target at
    // onset + k*interval. An empty protocol is a configuration error.
    static std::vector<Dispatch> apply_stimulus(const StimulusProtocol &protocol, SimTime now) {
        if (protocol.count <= 0) {
            throw DomainError("apply_stimulus: pulse count must be positive");
        }
        if (protocol.targets.empty()) {
            throw DomainError("apply_stimulus: no targets");
        }
        if (!(protocol.interval > 0.0)) {
            throw DomainError("apply_stimulus: interval must be > 0");
        }
        if (protocol.onset < now) {
            throw DomainError("apply_stimulus: onset lies in the past");
        }
        std::vector<Dispatch> out;
        out.reserve(static_cast<std::size_t>(protocol.count) * protocol.targets.size());
        for (int k = 0; k < protocol.count; ++k) {
            const SimTime due = protocol.onset + static_cast<SimTime>(k) * protocol.interval;
            for (AgentId target : protocol.targets) {
                out.push_back(Dispatch{due, target, StimulusPulse{}});
            }
        }
        return out;
    }

    // Appends one muscle discharge; only innervating motoneurons may write.
    void record_discharge(AgentId muscle_id, AgentId motoneuron, SimTime t) {
        MuscleState &m = muscle(muscle_id);
        if (std::find(m.innervating.begin(), m.innervating.end(), motoneuron) ==
            m.innervating.end()) {
            throw DomainError("record_discharge: spike from non-innervating neuron");
        }
        if (!m.discharge_log.empty() && t <= m.discharge_log.back()) {
            throw DomainError("record_discharge: discharge log must stay strictly increasing");
        }
        m.discharge_log.push_back(t);
        if (spike_sink_) {
            spike_sink_(muscle_id, t);
        }
    }

    // Drops depolarization samples that can no longer fall inside any demand
    // window; spike logs are kept whole for end-of-run exports.
    void prune_depolarization_logs(SimTime before) {
        for (auto &[id, agent] : neurons_) {
            std::erase_if(agent.depol_log,
                          [&](const auto &sample) { return sample.first < before; });
        }
    }

private:
    double horizon_;
    std::map<AgentId, NeuronAgent> neurons_;
    std::map<AgentId, MuscleState> muscles_;
    std::map<LinkId, SynapseLink> links_;
    std::map<AgentId, std::vector<LinkId>> out_;
    std::map<AgentId, std::vector<LinkId>> in_;
    LinkId next_link_ = 1;
    AgentId next_agent_ = 1;
    bool sealed_ = false;
    std::uint64_t topology_mutations_ = 0;
    SpikeSink spike_sink_;
};

} // namespace reflex
