// ASIED command-line interface: subgroup identification, trial simulation,
// operating characteristics, threshold calibration, and sensitivity runs.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "asied/commands.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string data_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = asied::hardware_threads();
};

int dispatch(const std::string& command, const GlobalArgs& args) {
    asied::RunConfig cfg = asied::load_config(args.config_path);
    asied::CommandOptions opts;
    if (args.seed_given) {
        opts.seed = args.seed;
    } else if (cfg.seed) {
        opts.seed = *cfg.seed;
    } else {
        throw asied::ConfigError("a seed is required (config \"seed\" or --seed)");
    }
    opts.threads = args.threads;
    opts.out_dir = args.out_dir;

    if (command == "identify") {
        if (args.data_path.empty()) throw asied::ConfigError("identify needs --data FILE");
        asied::cmd_identify(args.data_path, cfg, opts);
    } else if (command == "baseline-lr") {
        if (args.data_path.empty()) throw asied::ConfigError("baseline-lr needs --data FILE");
        asied::cmd_baseline_lr(args.data_path, cfg, opts);
    } else if (command == "simulate") {
        asied::cmd_simulate(cfg, opts);
    } else if (command == "oc") {
        asied::cmd_oc(cfg, opts);
    } else if (command == "calibrate") {
        asied::cmd_calibrate(cfg, opts);
    } else if (command == "sensitivity") {
        asied::cmd_sensitivity(cfg, opts);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ASIED: adaptive subgroup-identification enrichment design"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "Run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--seed", args.seed, "Master seed (overrides the config seed)")
        ->each([&](const std::string&) { args.seed_given = true; });
    app.add_option("--threads", args.threads, "Worker threads for replicate runs");
    app.add_option("--out", args.out_dir, "Output directory");

    auto* identify = app.add_subcommand("identify", "Fit the partition model to a CSV dataset");
    identify->add_option("--data", args.data_path, "Dataset CSV")->required();
    auto* baseline = app.add_subcommand("baseline-lr", "Bayesian linear-regression baseline");
    baseline->add_option("--data", args.data_path, "Dataset CSV")->required();
    app.add_subcommand("simulate", "Run one simulated trial");
    app.add_subcommand("oc", "Operating characteristics over replicate trials");
    app.add_subcommand("calibrate", "Scan (xi1, xi2) against the risk caps");
    app.add_subcommand("sensitivity", "First-interim decisions versus n1");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage problems are config errors
    }

    try {
        return dispatch(app.get_subcommands().front()->get_name(), args);
    } catch (const asied::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
