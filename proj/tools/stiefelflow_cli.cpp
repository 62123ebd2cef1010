// Experiment runner for the Stiefel-manifold damped-dynamics solvers.
//
// Subcommands:
//   solve      --config PATH  convergence / norms / stability experiments
//   sweep2d    --config PATH  the 2-D trajectory sweep
//   stability  --config PATH  spectrum verification report
//   demo-paper               the full set of figure-scale experiments
//
// --out, --engine and --seed override the corresponding config entries.
// Exit codes: 0 success, 2 divergence or failed solve, 3 config error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "stiefelflow/stiefelflow.hpp"

namespace {

struct Overrides {
    std::string out;
    std::string engine;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

stiefelflow::ExperimentConfig load_config(const std::string& path, const Overrides& ov) {
    stiefelflow::ExperimentConfig cfg = stiefelflow::ExperimentConfig::from_file(path);
    if (!ov.out.empty()) cfg.out_dir = ov.out;
    if (!ov.engine.empty()) cfg.engines = stiefelflow::parse_engines(ov.engine);
    if (ov.has_seed) cfg.solver.seed = ov.seed;
    return cfg;
}

int report(const stiefelflow::ExperimentOutcome& outcome) {
    for (const std::string& f : outcome.files) std::cout << "wrote " << f << "\n";
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stiefel-manifold optimization via damped dynamical systems"};
    app.require_subcommand(1);
    app.fallthrough();  // global --out/--engine/--seed may follow the subcommand

    Overrides ov;
    std::string config_path;
    app.add_option("--out", ov.out, "output directory (overrides config)");
    app.add_option("--engine", ov.engine, "lagrange | projected | both (overrides config)");
    auto* seed_opt = app.add_option("--seed", ov.seed, "RNG seed (overrides config)");

    auto* solve = app.add_subcommand("solve", "run a convergence/norms/stability experiment");
    solve->add_option("--config", config_path, "experiment config file")->required();

    auto* sweep = app.add_subcommand("sweep2d", "run the 2-D trajectory sweep");
    sweep->add_option("--config", config_path, "experiment config file")->required();

    auto* stab = app.add_subcommand("stability", "run the spectrum verification report");
    stab->add_option("--config", config_path, "experiment config file")->required();

    std::string demo_out = "demo_out";
    auto* demo = app.add_subcommand("demo-paper", "run all figure-scale experiments");
    demo->add_option("--out", demo_out, "output directory");

    CLI11_PARSE(app, argc, argv);
    ov.has_seed = seed_opt->count() > 0;

    try {
        if (demo->parsed()) {
            const std::string out = ov.out.empty() ? demo_out : ov.out;
            const std::uint64_t seed = ov.has_seed ? ov.seed : 42;
            return report(stiefelflow::demo_paper(out, seed));
        }
        stiefelflow::ExperimentConfig cfg = load_config(config_path, ov);
        if (sweep->parsed() && cfg.kind != stiefelflow::ExperimentKind::Sweep2D)
            throw stiefelflow::ConfigError("sweep2d requires kind = sweep-2d");
        if (stab->parsed() && cfg.kind != stiefelflow::ExperimentKind::StabilityReport)
            throw stiefelflow::ConfigError("stability requires kind = stability-report");
        return report(stiefelflow::run_experiment(cfg));
    } catch (const stiefelflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return stiefelflow::kExitConfigError;
    } catch (const stiefelflow::NotStationary& e) {
        std::cerr << "error: " << e.what() << "\n";
        return stiefelflow::kExitDiverged;
    } catch (const stiefelflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
