#pragma once

#include "reflex/cooperation.hpp"
#include "reflex/neuron.hpp"
#include "reflex/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace reflex {

// Aggregates every problem found in a scenario file; validation never stops
// at the first one.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string> &issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string> &issues) {
        std::ostringstream os;
        os << "invalid configuration (" << issues.size() << " issue(s)):";
        for (const auto &s : issues) {
            os << "\n  - " << s;
        }
        return os.str();
    }

    std::vector<std::string> issues_;
};

struct NeuronDefaults {
    double v_rest = -70.0;
    double theta = -55.0;
    double tau_m = 10.0;
    double t_refractory = 3.0;
};

struct AgentSpec {
    AgentId id = 0;
    std::string role; // afferent | interneuron | motoneuron | muscle
    std::vector<AgentId> innervating; // muscle only
    std::optional<double> v_rest, theta, tau_m, t_refractory;
};

struct LinkSpec {
    AgentId pre = 0;
    AgentId post = 0;
    double weight = 0.0;
    std::string sign = "excitatory";
    std::optional<double> delay; // drawn uniformly from the delay range when absent
    std::optional<double> w_min, w_max;
};

struct StimulusSpec {
    double onset_ms = 20.0;
    double interval_ms = 100.0;
    int count = 8;
    std::vector<AgentId> targets;
};

struct PsthSpec {
    double bin_width_ms = 1.0;
    double pre_ms = 0.0;
    std::optional<double> post_ms; // defaults to the stimulus interval
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::string mode; // simulate | calibrate | gen-reference; CLI subcommand overrides
    double duration_ms = 0.0;
    int trials = 500;
    std::optional<double> trial_tail_ms; // defaults to the stimulus interval
    double w_min = 0.0;
    double w_max = 20.0;
    double delay_min = 1.0;
    double delay_max = 5.0;
    NeuronDefaults neuron;
    std::vector<AgentSpec> agents;
    std::vector<LinkSpec> links;
    bool auto_links = false; // "links": "auto"
    StimulusSpec stimulus;
    SelfOrgParams self_org;
    PsthSpec psth;
    std::optional<AgentId> observe; // observed motoneuron; smallest id when absent

    double trial_tail() const { return trial_tail_ms.value_or(stimulus.interval_ms); }

    double trial_length() const {
        return stimulus.onset_ms +
               static_cast<double>(stimulus.count - 1) * stimulus.interval_ms + trial_tail();
    }

    double psth_post() const { return psth.post_ms.value_or(stimulus.interval_ms); }

    NeuronState neuron_state_for(const AgentSpec &a) const {
        NeuronState s;
        s.v_rest = a.v_rest.value_or(neuron.v_rest);
        s.theta = a.theta.value_or(neuron.theta);
        s.tau_m = a.tau_m.value_or(neuron.tau_m);
        s.t_refractory = a.t_refractory.value_or(neuron.t_refractory);
        s.v = s.v_rest;
        if (a.role == "afferent") {
            s.role = NeuronRole::Afferent;
        } else if (a.role == "interneuron") {
            s.role = NeuronRole::Interneuron;
        } else if (a.role == "motoneuron") {
            s.role = NeuronRole::Motoneuron;
        }
        return s;
    }
};

namespace detail {

inline void expect_keys(const nlohmann::json &j, const std::set<std::string> &allowed,
                        const std::string &where, std::vector<std::string> &issues) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (allowed.count(it.key()) == 0) {
            issues.push_back(where + ": unknown key '" + it.key() + "'");
        }
    }
}

template <typename T>
void read(const nlohmann::json &j, const char *key, T &out, const std::string &where,
          std::vector<std::string> &issues) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
        issues.push_back(where + ": key '" + std::string(key) + "' has the wrong type");
    }
}

template <typename T>
void read_optional(const nlohmann::json &j, const char *key, std::optional<T> &out,
                   const std::string &where, std::vector<std::string> &issues) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception &) {
        issues.push_back(where + ": key '" + std::string(key) + "' has the wrong type");
    }
}

} // namespace detail

inline nlohmann::json to_json(const ScenarioConfig &c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    if (!c.mode.empty()) {
        j["mode"] = c.mode;
    }
    j["duration_ms"] = c.duration_ms;
    j["trials"] = c.trials;
    if (c.trial_tail_ms) {
        j["trial_tail_ms"] = *c.trial_tail_ms;
    }
    j["weight_bounds"] = {{"min", c.w_min}, {"max", c.w_max}};
    j["delay_range"] = {{"min", c.delay_min}, {"max", c.delay_max}};
    j["neuron"] = {{"v_rest", c.neuron.v_rest},
                   {"theta", c.neuron.theta},
                   {"tau_m", c.neuron.tau_m},
                   {"t_refractory", c.neuron.t_refractory}};
    j["agents"] = nlohmann::json::array();
    for (const auto &a : c.agents) {
        nlohmann::json ja;
        ja["id"] = a.id;
        ja["role"] = a.role;
        if (!a.innervating.empty()) {
            ja["innervating"] = a.innervating;
        }
        if (a.v_rest) ja["v_rest"] = *a.v_rest;
        if (a.theta) ja["theta"] = *a.theta;
        if (a.tau_m) ja["tau_m"] = *a.tau_m;
        if (a.t_refractory) ja["t_refractory"] = *a.t_refractory;
        j["agents"].push_back(ja);
    }
    if (c.auto_links) {
        j["links"] = "auto";
    } else {
        j["links"] = nlohmann::json::array();
        for (const auto &l : c.links) {
            nlohmann::json jl;
            jl["pre"] = l.pre;
            jl["post"] = l.post;
            jl["weight"] = l.weight;
            jl["sign"] = l.sign;
            if (l.delay) jl["delay"] = *l.delay;
            if (l.w_min) jl["w_min"] = *l.w_min;
            if (l.w_max) jl["w_max"] = *l.w_max;
            j["links"].push_back(jl);
        }
    }
    j["stimulus"] = {{"onset_ms", c.stimulus.onset_ms},
                     {"interval_ms", c.stimulus.interval_ms},
                     {"count", c.stimulus.count},
                     {"targets", c.stimulus.targets}};
    j["self_organization"] = {{"k_tune", c.self_org.k_tune},
                              {"k_reorg", c.self_org.k_reorg},
                              {"max_hops", c.self_org.max_hops},
                              {"epsilon", c.self_org.epsilon},
                              {"n_max", c.self_org.n_max},
                              {"w_init", c.self_org.w_init},
                              {"horizon_ms", c.self_org.horizon_ms},
                              {"hop_decay", c.self_org.hop_decay},
                              {"always_propagate", c.self_org.always_propagate}};
    nlohmann::json jp;
    jp["bin_width_ms"] = c.psth.bin_width_ms;
    jp["pre_ms"] = c.psth.pre_ms;
    if (c.psth.post_ms) {
        jp["post_ms"] = *c.psth.post_ms;
    }
    j["psth"] = jp;
    if (c.observe) {
        j["observe"] = *c.observe;
    }
    return j;
}

// Parses without validating; collects structural issues (unknown keys, type
// mismatches) into `issues`.
inline ScenarioConfig config_from_json(const nlohmann::json &j, std::vector<std::string> &issues) {
    ScenarioConfig c;
    detail::expect_keys(j,
                        {"seed", "mode", "duration_ms", "trials", "trial_tail_ms",
                         "weight_bounds", "delay_range", "neuron", "agents", "links", "stimulus",
                         "self_organization", "psth", "observe"},
                        "config", issues);
    detail::read(j, "seed", c.seed, "config", issues);
    detail::read(j, "mode", c.mode, "config", issues);
    detail::read(j, "duration_ms", c.duration_ms, "config", issues);
    detail::read(j, "trials", c.trials, "config", issues);
    detail::read_optional(j, "trial_tail_ms", c.trial_tail_ms, "config", issues);
    if (j.contains("weight_bounds") && j["weight_bounds"].is_object()) {
        detail::expect_keys(j["weight_bounds"], {"min", "max"}, "weight_bounds", issues);
        detail::read(j["weight_bounds"], "min", c.w_min, "weight_bounds", issues);
        detail::read(j["weight_bounds"], "max", c.w_max, "weight_bounds", issues);
    }
    if (j.contains("delay_range") && j["delay_range"].is_object()) {
        detail::expect_keys(j["delay_range"], {"min", "max"}, "delay_range", issues);
        detail::read(j["delay_range"], "min", c.delay_min, "delay_range", issues);
        detail::read(j["delay_range"], "max", c.delay_max, "delay_range", issues);
    }
    if (j.contains("neuron") && j["neuron"].is_object()) {
        const auto &jn = j["neuron"];
        detail::expect_keys(jn, {"v_rest", "theta", "tau_m", "t_refractory"}, "neuron", issues);
        detail::read(jn, "v_rest", c.neuron.v_rest, "neuron", issues);
        detail::read(jn, "theta", c.neuron.theta, "neuron", issues);
        detail::read(jn, "tau_m", c.neuron.tau_m, "neuron", issues);
        detail::read(jn, "t_refractory", c.neuron.t_refractory, "neuron", issues);
    }
    if (j.contains("agents")) {
        if (!j["agents"].is_array()) {
            issues.push_back("agents: must be an array");
        } else {
            for (std::size_t i = 0; i < j["agents"].size(); ++i) {
                const auto &ja = j["agents"][i];
                const std::string where = "agents[" + std::to_string(i) + "]";
                if (!ja.is_object()) {
                    issues.push_back(where + ": must be an object");
                    continue;
                }
                detail::expect_keys(
                    ja, {"id", "role", "innervating", "v_rest", "theta", "tau_m", "t_refractory"},
                    where, issues);
                AgentSpec a;
                detail::read(ja, "id", a.id, where, issues);
                detail::read(ja, "role", a.role, where, issues);
                detail::read(ja, "innervating", a.innervating, where, issues);
                detail::read_optional(ja, "v_rest", a.v_rest, where, issues);
                detail::read_optional(ja, "theta", a.theta, where, issues);
                detail::read_optional(ja, "tau_m", a.tau_m, where, issues);
                detail::read_optional(ja, "t_refractory", a.t_refractory, where, issues);
                c.agents.push_back(std::move(a));
            }
        }
    }
    if (j.contains("links")) {
        if (j["links"].is_string()) {
            if (j["links"].get<std::string>() == "auto") {
                c.auto_links = true;
            } else {
                issues.push_back("links: string form must be \"auto\"");
            }
        } else if (j["links"].is_array()) {
            for (std::size_t i = 0; i < j["links"].size(); ++i) {
                const auto &jl = j["links"][i];
                const std::string where = "links[" + std::to_string(i) + "]";
                if (!jl.is_object()) {
                    issues.push_back(where + ": must be an object");
                    continue;
                }
                detail::expect_keys(jl, {"pre", "post", "weight", "sign", "delay", "w_min", "w_max"},
                                    where, issues);
                LinkSpec l;
                detail::read(jl, "pre", l.pre, where, issues);
                detail::read(jl, "post", l.post, where, issues);
                detail::read(jl, "weight", l.weight, where, issues);
                detail::read(jl, "sign", l.sign, where, issues);
                detail::read_optional(jl, "delay", l.delay, where, issues);
                detail::read_optional(jl, "w_min", l.w_min, where, issues);
                detail::read_optional(jl, "w_max", l.w_max, where, issues);
                c.links.push_back(std::move(l));
            }
        } else {
            issues.push_back("links: must be an array or \"auto\"");
        }
    }
    if (j.contains("stimulus") && j["stimulus"].is_object()) {
        const auto &js = j["stimulus"];
        detail::expect_keys(js, {"onset_ms", "interval_ms", "count", "targets"}, "stimulus",
                            issues);
        detail::read(js, "onset_ms", c.stimulus.onset_ms, "stimulus", issues);
        detail::read(js, "interval_ms", c.stimulus.interval_ms, "stimulus", issues);
        detail::read(js, "count", c.stimulus.count, "stimulus", issues);
        detail::read(js, "targets", c.stimulus.targets, "stimulus", issues);
    } else if (j.contains("stimulus")) {
        issues.push_back("stimulus: must be an object");
    }
    if (j.contains("self_organization") && j["self_organization"].is_object()) {
        const auto &js = j["self_organization"];
        detail::expect_keys(js,
                            {"k_tune", "k_reorg", "max_hops", "epsilon", "n_max", "w_init",
                             "horizon_ms", "hop_decay", "always_propagate"},
                            "self_organization", issues);
        detail::read(js, "k_tune", c.self_org.k_tune, "self_organization", issues);
        detail::read(js, "k_reorg", c.self_org.k_reorg, "self_organization", issues);
        detail::read(js, "max_hops", c.self_org.max_hops, "self_organization", issues);
        detail::read(js, "epsilon", c.self_org.epsilon, "self_organization", issues);
        detail::read(js, "n_max", c.self_org.n_max, "self_organization", issues);
        detail::read(js, "w_init", c.self_org.w_init, "self_organization", issues);
        detail::read(js, "horizon_ms", c.self_org.horizon_ms, "self_organization", issues);
        detail::read(js, "hop_decay", c.self_org.hop_decay, "self_organization", issues);
        detail::read(js, "always_propagate", c.self_org.always_propagate, "self_organization",
                     issues);
    }
    if (j.contains("psth") && j["psth"].is_object()) {
        const auto &jp = j["psth"];
        detail::expect_keys(jp, {"bin_width_ms", "pre_ms", "post_ms"}, "psth", issues);
        detail::read(jp, "bin_width_ms", c.psth.bin_width_ms, "psth", issues);
        detail::read(jp, "pre_ms", c.psth.pre_ms, "psth", issues);
        detail::read_optional(jp, "post_ms", c.psth.post_ms, "psth", issues);
    }
    detail::read_optional(j, "observe", c.observe, "config", issues);

    // Runtime-created links share the configured bounds and delay range.
    c.self_org.w_min = c.w_min;
    c.self_org.w_max = c.w_max;
    c.self_org.delay_min = c.delay_min;
    c.self_org.delay_max = c.delay_max;
    return c;
}

// Semantic validation; returns every violated rule, not just the first.
inline std::vector<std::string> validate(const ScenarioConfig &c) {
    std::vector<std::string> issues;
    std::map<AgentId, const AgentSpec *> by_id;

    if (c.agents.empty()) {
        issues.push_back("agents: at least one agent is required");
    }
    for (const auto &a : c.agents) {
        if (a.id == 0) {
            issues.push_back("agents: id 0 is reserved for the observer");
        }
        if (!by_id.emplace(a.id, &a).second) {
            issues.push_back("agents: duplicate id " + std::to_string(a.id));
        }
        const bool is_neuron =
            a.role == "afferent" || a.role == "interneuron" || a.role == "motoneuron";
        if (!is_neuron && a.role != "muscle") {
            issues.push_back("agents: id " + std::to_string(a.id) + " has unknown role '" +
                             a.role + "'");
        }
        if (a.role != "muscle" && !a.innervating.empty()) {
            issues.push_back("agents: id " + std::to_string(a.id) +
                             ": only muscles list innervating motoneurons");
        }
        if (a.role == "muscle" &&
            (a.v_rest || a.theta || a.tau_m || a.t_refractory)) {
            issues.push_back("agents: id " + std::to_string(a.id) +
                             ": muscles take no membrane constants");
        }
        if (is_neuron) {
            const NeuronState s = c.neuron_state_for(a);
            if (!(s.tau_m > 0.0)) {
                issues.push_back("agents: id " + std::to_string(a.id) + ": tau_m must be > 0");
            }
            if (s.t_refractory < 0.0) {
                issues.push_back("agents: id " + std::to_string(a.id) +
                                 ": t_refractory must be >= 0");
            }
            if (!(s.theta > s.v_rest)) {
                issues.push_back("agents: id " + std::to_string(a.id) +
                                 ": theta must exceed v_rest");
            }
        }
    }

    auto role_of = [&](AgentId id) -> std::string {
        auto it = by_id.find(id);
        return it == by_id.end() ? std::string() : it->second->role;
    };
    auto is_neuron_id = [&](AgentId id) {
        const std::string r = role_of(id);
        return r == "afferent" || r == "interneuron" || r == "motoneuron";
    };

    std::size_t n_moto = 0, n_aff = 0;
    for (const auto &a : c.agents) {
        n_moto += a.role == "motoneuron";
        n_aff += a.role == "afferent";
        if (a.role == "muscle") {
            if (a.innervating.empty()) {
                issues.push_back("agents: muscle " + std::to_string(a.id) +
                                 " innervates no motoneuron");
            }
            for (AgentId m : a.innervating) {
                if (role_of(m) != "motoneuron") {
                    issues.push_back("agents: muscle " + std::to_string(a.id) +
                                     " references non-motoneuron id " + std::to_string(m));
                }
            }
        }
    }
    if (n_moto == 0) {
        issues.push_back("agents: at least one motoneuron is required");
    }

    if (!(c.w_min >= 0.0) || !(c.w_min < c.w_max)) {
        issues.push_back("weight_bounds: need 0 <= min < max");
    }
    if (!(c.delay_min > 0.0) || !(c.delay_min <= c.delay_max)) {
        issues.push_back("delay_range: need 0 < min <= max");
    }

    if (c.auto_links && (n_aff == 0 || n_moto == 0)) {
        issues.push_back("links: auto construction needs at least one afferent and one motoneuron");
    }
    for (std::size_t i = 0; i < c.links.size(); ++i) {
        const auto &l = c.links[i];
        const std::string where = "links[" + std::to_string(i) + "]";
        for (AgentId end : {l.pre, l.post}) {
            if (by_id.count(end) == 0) {
                issues.push_back(where + ": references unknown agent id " + std::to_string(end));
            } else if (!is_neuron_id(end)) {
                issues.push_back(where + ": agent " + std::to_string(end) + " is not a neuron");
            }
        }
        if (l.sign != "excitatory" && l.sign != "inhibitory") {
            issues.push_back(where + ": sign must be excitatory or inhibitory");
        }
        const double lo = l.w_min.value_or(c.w_min);
        const double hi = l.w_max.value_or(c.w_max);
        if (!(lo >= 0.0) || !(lo < hi)) {
            issues.push_back(where + ": need 0 <= w_min < w_max");
        } else if (l.weight < lo || l.weight > hi) {
            issues.push_back(where + ": weight outside [w_min, w_max]");
        }
        if (l.delay && !(*l.delay > 0.0)) {
            issues.push_back(where + ": delay must be strictly positive");
        }
    }

    if (!(c.stimulus.interval_ms > 0.0)) {
        issues.push_back("stimulus: interval_ms must be > 0");
    }
    if (c.stimulus.count < 1) {
        issues.push_back("stimulus: count must be >= 1");
    }
    if (c.stimulus.onset_ms < 0.0) {
        issues.push_back("stimulus: onset_ms must be >= 0");
    }
    if (c.stimulus.targets.empty()) {
        issues.push_back("stimulus: at least one target afferent is required");
    }
    for (AgentId t : c.stimulus.targets) {
        if (role_of(t) != "afferent") {
            issues.push_back("stimulus: target " + std::to_string(t) + " is not an afferent");
        }
    }

    const auto &so = c.self_org;
    if (so.k_tune < 1) issues.push_back("self_organization: k_tune must be >= 1");
    if (so.k_reorg < 1) issues.push_back("self_organization: k_reorg must be >= 1");
    if (so.max_hops < 0) issues.push_back("self_organization: max_hops must be >= 0");
    if (!(so.epsilon > 0.0)) issues.push_back("self_organization: epsilon must be > 0");
    if (so.n_max < 1) issues.push_back("self_organization: n_max must be >= 1");
    if (!(so.w_init > 0.0) || so.w_init > c.w_max || so.w_init < c.w_min) {
        issues.push_back("self_organization: w_init must lie inside the weight bounds");
    }
    if (!(so.horizon_ms > 0.0)) issues.push_back("self_organization: horizon_ms must be > 0");
    if (!(so.hop_decay > 0.0) || so.hop_decay > 1.0) {
        issues.push_back("self_organization: hop_decay must be in (0, 1]");
    }

    if (!(c.psth.bin_width_ms > 0.0)) issues.push_back("psth: bin_width_ms must be > 0");
    if (c.psth.pre_ms < 0.0) issues.push_back("psth: pre_ms must be >= 0");
    if (!(c.psth_post() > 0.0)) issues.push_back("psth: post_ms must be > 0");

    if (c.trials < 1) issues.push_back("trials: must be >= 1");
    if (c.duration_ms < 0.0) issues.push_back("duration_ms: must be >= 0");
    if (c.trial_tail_ms && !(*c.trial_tail_ms > 0.0)) {
        issues.push_back("trial_tail_ms: must be > 0");
    }
    if (!c.mode.empty() && c.mode != "simulate" && c.mode != "calibrate" &&
        c.mode != "gen-reference") {
        issues.push_back("mode: must be simulate, calibrate or gen-reference");
    }
    if (c.observe && role_of(*c.observe) != "motoneuron") {
        issues.push_back("observe: id " + std::to_string(*c.observe) + " is not a motoneuron");
    }
    return issues;
}

inline ScenarioConfig parse_config(const nlohmann::json &j) {
    std::vector<std::string> issues;
    ScenarioConfig c = config_from_json(j, issues);
    auto more = validate(c);
    issues.insert(issues.end(), more.begin(), more.end());
    if (!issues.empty()) {
        throw ConfigError(std::move(issues));
    }
    return c;
}

inline ScenarioConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot open config file: " + path});
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    return parse_config(j);
}

inline void save_config(const ScenarioConfig &c, const std::string &path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError({"cannot write config file: " + path});
    }
    out << to_json(c).dump(2) << "\n";
}

} // namespace reflex
