// Command-line front end: simulate, calibrate and gen-reference runs over a
// scenario configuration file.

#include "reflex/reflex.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
};

void add_common(CLI::App *cmd, CommonArgs &args) {
    cmd->add_option("config", args.config_path, "scenario configuration file (JSON)")
        ->required();
    cmd->add_option("--seed", args.seed, "override the configured seed");
    cmd->add_option("--trials", args.trials, "override the configured trial count/budget");
}

reflex::ScenarioConfig load(const CommonArgs &args) {
    reflex::ScenarioConfig cfg = reflex::load_config(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
    }
    if (args.trials) {
        cfg.trials = *args.trials;
        auto issues = reflex::validate(cfg);
        if (!issues.empty()) {
            throw reflex::ConfigError(std::move(issues));
        }
    }
    return cfg;
}

void print_report(const reflex::RunReport &report, const std::filesystem::path &out_dir) {
    std::cout << "trials executed: " << report.trials_executed << "\n"
              << "final mean relative error: " << report.final_error << "\n"
              << "converged: " << (report.converged ? "yes" : "no") << "\n"
              << "outputs: " << out_dir.string() << "\n";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"self-organizing motor-unit reflex pathway simulator"};
    app.require_subcommand(1);

    CommonArgs sim_args, cal_args, gen_args;
    std::string sim_out = "out";
    std::string cal_out = "out";
    std::string cal_reference;
    std::string gen_out;

    CLI::App *sim = app.add_subcommand("simulate", "run the network nominally, no adaptation");
    add_common(sim, sim_args);
    sim->add_option("--out-dir", sim_out, "output directory");

    CLI::App *cal = app.add_subcommand("calibrate", "self-organize against a reference trace");
    add_common(cal, cal_args);
    cal->add_option("--reference", cal_reference, "reference frequency CSV")->required();
    cal->add_option("--out-dir", cal_out, "output directory");

    CLI::App *gen = app.add_subcommand("gen-reference",
                                       "generate a reference trace from the configured network");
    add_common(gen, gen_args);
    gen->add_option("--out", gen_out, "output reference CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            reflex::ScenarioConfig cfg = load(sim_args);
            const auto report = reflex::run_simulate(cfg, sim_out);
            print_report(report, sim_out);
        } else if (cal->parsed()) {
            reflex::ScenarioConfig cfg = load(cal_args);
            const auto reference = reflex::load_reference(cal_reference, cfg.self_org.epsilon);
            const auto report = reflex::run_calibrate(cfg, reference, cal_out);
            print_report(report, cal_out);
        } else if (gen->parsed()) {
            reflex::ScenarioConfig cfg = load(gen_args);
            const auto trace = reflex::run_gen_reference(cfg, gen_out);
            std::cout << "reference points: " << trace.points.size() << "\n"
                      << "written: " << gen_out << "\n";
        }
    } catch (const reflex::ConfigError &e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
