#pragma once

#include "reflex/analysis.hpp"
#include "reflex/config.hpp"
#include "reflex/cooperation.hpp"
#include "reflex/engine.hpp"
#include "reflex/network.hpp"
#include "reflex/org_log.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace reflex {

// Agent id of the external observer; never a network node.
inline constexpr AgentId kViewerId = 0;

// Trials that must sit inside the tolerance band, on trailing average, before
// a calibration counts as converged.
inline constexpr int kConvergenceWindow = 10;

// One simulation instance: engine, network, observer and cooperation state.
// A trial is one stimulus protocol run; the observer compares the observed
// motoneuron discharge against the reference at each trial end and feeds the
// resulting NCSs back into the network, where the behavior ladder reacts.
class Simulation {
public:
    struct TrialRecord {
        double error = 0.0;
        std::size_t ncs_count = 0;       // from compare()
        std::size_t feedbacks_sent = 0;  // scheduled toward the motoneuron
        FrequencySeries observed;        // trial-relative times
    };

    explicit Simulation(const ScenarioConfig &cfg)
        : cfg_(cfg), params_(cfg.self_org), engine_(cfg.seed),
          network_(cfg.self_org.horizon_ms) {
        for (const auto &a : cfg_.agents) {
            if (a.role != "muscle") {
                network_.add_neuron(a.id, cfg_.neuron_state_for(a));
            }
        }
        for (const auto &a : cfg_.agents) {
            if (a.role == "muscle") {
                network_.add_muscle(a.id, a.innervating);
            }
        }
        if (cfg_.auto_links) {
            build_auto_links();
        } else {
            for (const auto &l : cfg_.links) {
                const double delay =
                    l.delay ? *l.delay : engine_.rng().uniform(cfg_.delay_min, cfg_.delay_max);
                network_.add_link(l.pre, l.post,
                                  l.sign == "inhibitory" ? SynapseSign::Inhibitory
                                                         : SynapseSign::Excitatory,
                                  l.weight, l.w_min.value_or(cfg_.w_min),
                                  l.w_max.value_or(cfg_.w_max), delay);
            }
        }
        network_.seal_construction();

        observed_moto_ = 0;
        if (cfg_.observe) {
            observed_moto_ = *cfg_.observe;
        } else {
            for (const auto &[id, agent] : network_.neurons()) {
                if (agent.state.role == NeuronRole::Motoneuron) {
                    observed_moto_ = id;
                    break;
                }
            }
        }
        if (observed_moto_ == 0) {
            throw DomainError("simulation: no motoneuron to observe");
        }

        interneuron_proto_ = NeuronState{};
        interneuron_proto_.v_rest = cfg_.neuron.v_rest;
        interneuron_proto_.v = cfg_.neuron.v_rest;
        interneuron_proto_.theta = cfg_.neuron.theta;
        interneuron_proto_.tau_m = cfg_.neuron.tau_m;
        interneuron_proto_.t_refractory = cfg_.neuron.t_refractory;
        interneuron_proto_.role = NeuronRole::Interneuron;

        trial_len_ = cfg_.trial_length();
        engine_.set_handler([this](const Event &ev) { handle_event(ev); });
    }

    void set_reference(ReferenceTrace ref) { reference_ = std::move(ref); }
    void set_spike_sink(Network::SpikeSink sink) { network_.set_spike_sink(std::move(sink)); }

    Engine &engine() { return engine_; }
    Network &network() { return network_; }
    const Network &network() const { return network_; }
    OrganizationLog &org_log() { return org_log_; }
    const OrganizationLog &org_log() const { return org_log_; }

    AgentId observed_motoneuron() const { return observed_moto_; }
    double trial_length() const { return trial_len_; }
    int trials_executed() const { return static_cast<int>(trial_records_.size()); }
    const std::vector<TrialRecord> &trial_records() const { return trial_records_; }
    const std::vector<SimTime> &stimulus_times() const { return stimulus_times_; }
    bool converged() const { return converged_; }
    bool evolution_refused() const { return evolution_refused_; }

    // Mean trial error over the trailing convergence window.
    double trailing_error() const {
        if (trial_records_.empty()) {
            return 1.0;
        }
        const std::size_t n =
            std::min<std::size_t>(kConvergenceWindow, trial_records_.size());
        double sum = 0.0;
        for (std::size_t i = trial_records_.size() - n; i < trial_records_.size(); ++i) {
            sum += trial_records_[i].error;
        }
        return sum / static_cast<double>(n);
    }

    // Runs one trial. With `cooperate` the comparison NCSs are fed back and
    // the ladder may tune, reorganize or evolve the network.
    void run_trial(bool cooperate) {
        const SimTime t0 = next_trial_start_;
        const SimTime t1 = t0 + trial_len_;
        engine_.add_action(kViewerId, t0, [this](SimTime t) { begin_trial(t); });
        engine_.add_action(kViewerId, t1,
                           [this, t0, t1, cooperate](SimTime) { end_trial(t0, t1, cooperate); });
        engine_.run_until(t1);
        next_trial_start_ = t1;
    }

    void run_nominal(int n_trials) {
        for (int i = 0; i < n_trials; ++i) {
            run_trial(false);
        }
    }

    // Repeats cooperative trials until the trailing-window mean error drops
    // inside the tolerance band or the budget runs out.
    bool calibrate(int budget) {
        if (!reference_) {
            throw DomainError("calibrate: no reference trace set");
        }
        for (int i = 0; i < budget; ++i) {
            run_trial(true);
            if (trials_executed() >= kConvergenceWindow &&
                trailing_error() <= params_.epsilon) {
                converged_ = true;
                break;
            }
        }
        return converged_;
    }

    // Index-wise mean of the per-trial frequency series collected so far.
    ReferenceTrace averaged_reference() const {
        ReferenceTrace trace;
        trace.tolerance = params_.epsilon;
        std::size_t longest = 0;
        for (const auto &rec : trial_records_) {
            longest = std::max(longest, rec.observed.size());
        }
        for (std::size_t i = 0; i < longest; ++i) {
            double t_sum = 0.0, f_sum = 0.0;
            std::size_t n = 0;
            for (const auto &rec : trial_records_) {
                if (i < rec.observed.size()) {
                    t_sum += rec.observed[i].t;
                    f_sum += rec.observed[i].hz;
                    ++n;
                }
            }
            if (n > 0) {
                trace.points.push_back(FrequencyPoint{t_sum / static_cast<double>(n),
                                                      f_sum / static_cast<double>(n)});
            }
        }
        return trace;
    }

    FrequencySeries full_run_frequency() const {
        const auto &spikes = network_.neuron(observed_moto_).spikes;
        return instantaneous_frequency(spikes);
    }

    Psth accumulated_psth() const {
        const auto &spikes = network_.neuron(observed_moto_).spikes;
        return psth(spikes, stimulus_times_, cfg_.psth.bin_width_ms, cfg_.psth.pre_ms,
                    cfg_.psth_post());
    }

private:
    void build_auto_links() {
        std::vector<AgentId> aff, inter, moto;
        for (const auto &[id, agent] : network_.neurons()) {
            switch (agent.state.role) {
            case NeuronRole::Afferent: aff.push_back(id); break;
            case NeuronRole::Interneuron: inter.push_back(id); break;
            case NeuronRole::Motoneuron: moto.push_back(id); break;
            }
        }
        auto connect = [&](const std::vector<AgentId> &from, const std::vector<AgentId> &to) {
            for (AgentId pre : from) {
                for (AgentId post : to) {
                    const double w = engine_.rng().uniform(params_.w_init, cfg_.w_max);
                    const double d = engine_.rng().uniform(cfg_.delay_min, cfg_.delay_max);
                    network_.add_link(pre, post, SynapseSign::Excitatory, w, cfg_.w_min,
                                      cfg_.w_max, d);
                }
            }
        };
        if (inter.empty()) {
            connect(aff, moto);
        } else {
            connect(aff, inter);
            connect(inter, moto);
        }
    }

    void handle_event(const Event &ev) {
        if (const auto *sd = std::get_if<SpikeDelivery>(&ev.payload)) {
            for (const Dispatch &d : network_.deliver_psp(sd->link, ev.due)) {
                engine_.schedule(d);
            }
            return;
        }
        if (std::holds_alternative<StimulusPulse>(ev.payload)) {
            if (!network_.has_neuron(ev.target)) {
                return;
            }
            for (const Dispatch &d : network_.force_fire(ev.target, ev.due)) {
                engine_.schedule(d);
            }
            return;
        }
        if (const auto *fd = std::get_if<FeedbackDelivery>(&ev.payload)) {
            if (!network_.has_neuron(ev.target)) {
                return; // recipient retired while the feedback was in flight
            }
            network_.neuron(ev.target).memory.memorize(fd->feedback, ev.due);
            log_feedback(ev.due, ev.target, fd->feedback);
            return;
        }
        if (const auto *md = std::get_if<MuscleDischarge>(&ev.payload)) {
            network_.record_discharge(ev.target, md->motoneuron, ev.due);
            return;
        }
    }

    void begin_trial(SimTime t0) {
        for (auto &[id, agent] : network_.neurons()) {
            network_.neuron(id).memory.forget(t0);
        }
        network_.prune_depolarization_logs(t0 - params_.horizon_ms);

        StimulusProtocol proto;
        proto.onset = t0 + cfg_.stimulus.onset_ms;
        proto.interval = cfg_.stimulus.interval_ms;
        proto.count = cfg_.stimulus.count;
        proto.targets = cfg_.stimulus.targets;
        for (int k = 0; k < proto.count; ++k) {
            stimulus_times_.push_back(proto.onset + static_cast<SimTime>(k) * proto.interval);
        }
        for (const Dispatch &d : Network::apply_stimulus(proto, t0)) {
            engine_.schedule(d);
        }
    }

    void end_trial(SimTime t0, SimTime t1, bool cooperate) {
        const auto &spikes = network_.neuron(observed_moto_).spikes;
        std::vector<SimTime> rel;
        for (SimTime t : spikes) {
            if (t >= t0 && t < t1) {
                rel.push_back(t - t0);
            }
        }

        TrialRecord rec;
        rec.observed = instantaneous_frequency(rel);

        std::vector<Ncs> situations;
        if (reference_) {
            situations = compare(rec.observed, *reference_);
            rec.ncs_count = situations.size();
            rec.error = trial_error(rec.observed, *reference_);
            // A partially silent trial matches pointwise but is still short
            // of spikes; flag the deficit so the ladder keeps working.
            const std::size_t n_ref = reference_->points.size();
            if (!rec.observed.empty() && rec.observed.size() < n_ref) {
                Ncs deficit;
                deficit.kind = NcsKind::InstantFrequency;
                deficit.direction = ErrorDirection::TooLow;
                deficit.magnitude = std::min(
                    1.0, static_cast<double>(n_ref - rec.observed.size()) /
                             static_cast<double>(n_ref));
                situations.push_back(deficit);
            }
        }

        if (cooperate && reference_) {
            const TimeWindow window{t0, t1};
            if (situations.empty()) {
                engine_.schedule(t1, observed_moto_,
                                 FeedbackDelivery{Feedback::good(kViewerId)});
                rec.feedbacks_sent = 1;
            } else {
                for (Ncs ncs : situations) {
                    ncs.origin = observed_moto_;
                    ncs.window = window;
                    Feedback fb;
                    fb.ncs = ncs;
                    fb.criticality = ncs.magnitude;
                    fb.hops = 0;
                    fb.sender = kViewerId;
                    engine_.schedule(t1, observed_moto_, FeedbackDelivery{fb});
                }
                rec.feedbacks_sent = situations.size();
            }
            engine_.add_action(kViewerId, t1, [this](SimTime t) { cooperation_round(t); });
        }
        trial_records_.push_back(std::move(rec));
    }

    void cooperation_round(SimTime t) {
        std::vector<std::pair<AgentId, double>> candidates;
        for (const auto &[id, agent] : network_.neurons()) {
            if (agent.memory.has_unserviced()) {
                candidates.emplace_back(id,
                                        compute_criticality(agent.memory, t, params_.hop_decay));
            }
        }
        bool propagated = false;
        while (!candidates.empty()) {
            const AgentId helpee = select_helpee(candidates);
            candidates.erase(std::find_if(candidates.begin(), candidates.end(),
                                          [&](const auto &c) { return c.first == helpee; }));
            NeuronAgent &agent = network_.neuron(helpee);
            const auto *entry = agent.memory.most_critical_unserviced();
            if (entry == nullptr) {
                continue;
            }
            const Feedback fb = entry->feedback;
            agent.memory.mark_all_serviced();
            const BehaviorAction action =
                handle_feedback(network_, ladder_[helpee], helpee, fb, params_);
            propagated |= execute_action(helpee, fb, action, t);
        }
        for (const Retirement &r : retire_useless_interneurons(network_)) {
            ladder_.erase(r.agent);
            org_log_.append(t, "evolve",
                            {{"agent", r.agent},
                             {"action", "retire_interneuron"},
                             {"links_removed", r.links_removed}});
        }
        if (propagated) {
            engine_.add_action(kViewerId, t, [this](SimTime tt) { cooperation_round(tt); });
        }
    }

    // Applies the chosen rung; returns whether any feedback was propagated.
    bool execute_action(AgentId id, const Feedback &fb, BehaviorAction action, SimTime t) {
        switch (action) {
        case BehaviorAction::NoAction: {
            if (fb.is_good()) {
                for (LinkId l : network_.in_links(id)) {
                    apply_tracker(t, id, l, TrackerFeedback::Good);
                }
                org_log_.append(t, "good_reset", {{"agent", id}});
            }
            return false;
        }
        case BehaviorAction::Tune: {
            const ErrorDirection demand = fb.ncs->direction;
            for (LinkId l : network_.in_links(id)) {
                const SynapseLink &link = network_.link(l);
                const TrackerFeedback dir = tune_direction(link.sign, demand);
                if (!at_limit(link.weight, dir)) {
                    apply_tracker(t, id, l, dir);
                }
            }
            ladder_[id][LadderKey{fb.ncs->kind, demand}].tune_exhausted = 0;
            if (params_.always_propagate) {
                return do_propagate(id, fb, t);
            }
            return false;
        }
        case BehaviorAction::Propagate: {
            const LadderKey key{fb.ncs->kind, fb.ncs->direction};
            org_log_.append(t, "tune_exhausted",
                            {{"agent", id},
                             {"ncs_kind", to_string(fb.ncs->kind)},
                             {"direction", to_string(fb.ncs->direction)},
                             {"count", ladder_[id][key].tune_exhausted}});
            return do_propagate(id, fb, t);
        }
        case BehaviorAction::Reorganize: {
            const LadderKey key{fb.ncs->kind, fb.ncs->direction};
            const ReorganizeOutcome out =
                reorganize(network_, engine_.rng(), id, *fb.ncs, params_);
            if (out.ok) {
                org_log_.append(t, "reorganize",
                                {{"agent", id},
                                 {"action", to_string(out.action)},
                                 {"link", out.link},
                                 {"pre", out.pre},
                                 {"weight", out.weight},
                                 {"ncs_kind", to_string(fb.ncs->kind)},
                                 {"direction", to_string(fb.ncs->direction)}});
                ladder_[id][key] = LadderCounters{};
            } else {
                ++ladder_[id][key].reorg_failed;
                org_log_.append(t, "reorganize_failed",
                                {{"agent", id},
                                 {"reason", out.reason},
                                 {"ncs_kind", to_string(fb.ncs->kind)},
                                 {"direction", to_string(fb.ncs->direction)},
                                 {"count", ladder_[id][key].reorg_failed}});
            }
            return false;
        }
        case BehaviorAction::Evolve: {
            const LadderKey key{fb.ncs->kind, fb.ncs->direction};
            const EvolveOutcome out =
                evolve(network_, engine_.rng(), id, *fb.ncs, interneuron_proto_, params_);
            if (out.action == EvolveOutcome::Action::CreateInterneuron) {
                org_log_.append(t, "evolve",
                                {{"agent", id},
                                 {"action", "create_interneuron"},
                                 {"created", out.created},
                                 {"afferent", out.afferent},
                                 {"link_in", out.link_in},
                                 {"link_out", out.link_out},
                                 {"weight", params_.w_init}});
            } else {
                if (out.reason == "network size cap reached") {
                    evolution_refused_ = true;
                }
                org_log_.append(t, "evolve",
                                {{"agent", id}, {"action", "refused"}, {"reason", out.reason}});
            }
            ladder_[id][key] = LadderCounters{};
            return false;
        }
        }
        return false;
    }

    bool do_propagate(AgentId id, const Feedback &fb, SimTime t) {
        const auto own = detect_depolarization_ncs(network_, id, fb, t);
        if (!own) {
            return false;
        }
        const auto feedbacks = propagate_feedback(network_, id, *own, fb.hops, params_);
        if (feedbacks.empty()) {
            return false;
        }
        for (const auto &[to, out_fb] : feedbacks) {
            engine_.schedule(t, to, FeedbackDelivery{out_fb});
        }
        org_log_.append(t, "propagate",
                        {{"agent", id},
                         {"ncs_kind", to_string(own->kind)},
                         {"direction", to_string(own->direction)},
                         {"hops", fb.hops + 1},
                         {"fanout", feedbacks.size()}});
        return true;
    }

    void apply_tracker(SimTime t, AgentId agent, LinkId link_id, TrackerFeedback dir) {
        SynapseLink &link = network_.link(link_id);
        const double before = link.weight.value;
        link.weight = apply_feedback(link.weight, dir);
        const char *dir_name = dir == TrackerFeedback::Up     ? "up"
                               : dir == TrackerFeedback::Down ? "down"
                                                              : "good";
        org_log_.append(t, "tune",
                        {{"agent", agent},
                         {"link", link_id},
                         {"pre", link.pre},
                         {"post", link.post},
                         {"direction", dir_name},
                         {"weight_before", before},
                         {"weight_after", link.weight.value},
                         {"delta_after", link.weight.delta}});
    }

    void log_feedback(SimTime t, AgentId recipient, const Feedback &fb) {
        nlohmann::json j{{"agent", recipient}, {"sender", fb.sender}, {"hops", fb.hops},
                         {"criticality", fb.criticality}};
        if (fb.is_good()) {
            j["ncs_kind"] = "good";
        } else {
            j["ncs_kind"] = to_string(fb.ncs->kind);
            j["direction"] = to_string(fb.ncs->direction);
            j["magnitude"] = fb.ncs->magnitude;
        }
        org_log_.append(t, "feedback", std::move(j));
    }

    ScenarioConfig cfg_;
    SelfOrgParams params_;
    Engine engine_;
    Network network_;
    OrganizationLog org_log_;
    std::map<AgentId, LadderState> ladder_;
    std::optional<ReferenceTrace> reference_;
    NeuronState interneuron_proto_;
    AgentId observed_moto_ = 0;
    double trial_len_ = 0.0;
    SimTime next_trial_start_ = 0.0;
    std::vector<TrialRecord> trial_records_;
    std::vector<SimTime> stimulus_times_;
    bool converged_ = false;
    bool evolution_refused_ = false;
};

} // namespace reflex
