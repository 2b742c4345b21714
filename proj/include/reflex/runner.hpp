#pragma once

#include "reflex/config.hpp"
#include "reflex/io.hpp"
#include "reflex/simulation.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>

namespace reflex {

struct RunReport {
    double final_error = 0.0;
    int trials_executed = 0;
    std::map<std::string, std::int64_t> org_event_counts;
    bool converged = false;
    bool evolution_refused = false;
    double wall_clock_seconds = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["final_error"] = final_error;
        j["trials_executed"] = trials_executed;
        j["org_event_counts"] = org_event_counts;
        j["converged"] = converged;
        j["evolution_refused"] = evolution_refused;
        j["wall_clock_seconds"] = wall_clock_seconds;
        return j;
    }
};

namespace detail {

// Wires streaming logs into a simulation: spikes and organization records go
// to disk as they happen, with truncation markers if the run aborts.
struct RunLogs {
    std::unique_ptr<CsvWriter> spikes;
    std::unique_ptr<JsonlWriter> organization;

    RunLogs(Simulation &sim, const std::filesystem::path &out_dir) {
        std::filesystem::create_directories(out_dir);
        spikes = std::make_unique<CsvWriter>(out_dir / "spikes.csv", "agent_id,time_ms");
        organization = std::make_unique<JsonlWriter>(out_dir / "organization.jsonl");
        sim.set_spike_sink([this](AgentId id, SimTime t) {
            spikes->row({std::to_string(id), format_value(t)});
        });
        sim.org_log().set_sink(
            [this](const OrgRecord &rec) { organization->write(rec.to_json()); });
    }

    void finish() {
        spikes->finish();
        organization->finish();
    }
};

inline void write_common_outputs(Simulation &sim, const std::filesystem::path &out_dir,
                                 const FrequencySeries &freq, const RunReport &report) {
    save_frequency_series(freq, out_dir / "frequency.csv");
    save_psth(sim.accumulated_psth(), out_dir / "psth.csv");
    std::ofstream rep(out_dir / "report.json");
    rep << report.to_json().dump(2) << "\n";
}

inline RunReport make_report(const Simulation &sim, bool converged, double final_error,
                             double wall_seconds) {
    RunReport r;
    r.final_error = final_error;
    r.trials_executed = sim.trials_executed();
    r.org_event_counts = sim.org_log().counts();
    r.converged = converged;
    r.evolution_refused = sim.evolution_refused();
    r.wall_clock_seconds = wall_seconds;
    return r;
}

} // namespace detail

// Nominal run: the stimulus protocol repeats for duration_ms with the
// self-organization layer disabled. Deterministic for a fixed seed.
inline RunReport run_simulate(const ScenarioConfig &cfg, const std::filesystem::path &out_dir) {
    const auto start = std::chrono::steady_clock::now();
    Simulation sim(cfg);
    detail::RunLogs logs(sim, out_dir);

    const int trials =
        static_cast<int>(std::floor(cfg.duration_ms / sim.trial_length()));
    sim.run_nominal(trials);
    sim.engine().run_until(cfg.duration_ms);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    RunReport report = detail::make_report(sim, true, 0.0, wall);
    logs.finish();
    detail::write_common_outputs(sim, out_dir, sim.full_run_frequency(), report);
    return report;
}

// Calibration run: cooperative trials against a reference until the trailing
// mean relative error sits inside the tolerance band or the budget is spent.
// Non-convergence is a reported outcome, not an error.
inline RunReport run_calibrate(const ScenarioConfig &cfg, const ReferenceTrace &reference,
                               const std::filesystem::path &out_dir) {
    const auto start = std::chrono::steady_clock::now();
    Simulation sim(cfg);
    ReferenceTrace ref = reference;
    ref.tolerance = cfg.self_org.epsilon;
    sim.set_reference(ref);
    detail::RunLogs logs(sim, out_dir);

    const bool converged = sim.calibrate(cfg.trials);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    RunReport report = detail::make_report(sim, converged, sim.trailing_error(), wall);
    logs.finish();

    FrequencySeries last;
    if (!sim.trial_records().empty()) {
        last = sim.trial_records().back().observed;
    }
    detail::write_common_outputs(sim, out_dir, last, report);
    return report;
}

// Simulates the configured (ground-truth) network and writes its
// trial-averaged frequency series as a reference trace.
inline ReferenceTrace run_gen_reference(const ScenarioConfig &cfg,
                                        const std::filesystem::path &out_csv) {
    Simulation sim(cfg);
    sim.run_nominal(cfg.trials);
    const ReferenceTrace trace = sim.averaged_reference();
    if (trace.points.empty()) {
        throw std::runtime_error(
            "gen-reference: the configured network produced no observable discharge");
    }
    if (!out_csv.empty()) {
        if (out_csv.has_parent_path()) {
            std::filesystem::create_directories(out_csv.parent_path());
        }
        save_reference(trace, out_csv);
    }
    return trace;
}

} // namespace reflex
