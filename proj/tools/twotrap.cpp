// Command-line driver: rearrangement benchmark, join experiment,
// fluorescence study and analysis of external distance data.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twotrap/config.hpp"
#include "twotrap/ensemble.hpp"
#include "twotrap/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-trap atom rearrangement Monte Carlo"};
    std::string config_path;
    std::string mode_name = "rearrange";
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> sequence_path;
    std::optional<std::string> distances_path;
    int workers = 0;

    app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
    app.add_option("--mode", mode_name, "rearrange | join | fluorescence | analyze")->capture_default_str();
    app.add_option("--trials", trials, "override the number of trials");
    app.add_option("--seed", seed, "override master_seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--sequence", sequence_path, "override the sequence file");
    app.add_option("--distances", distances_path, "final-distance CSV for analyze mode");
    app.add_option("--workers", workers, "OpenMP worker count (0 = runtime default)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    twotrap::ExperimentConfig cfg;
    twotrap::Mode mode{};
    try {
        mode = twotrap::parse_mode(mode_name);
        cfg = twotrap::load_config(config_path);
        if (sequence_path) twotrap::reload_sequence(cfg, *sequence_path);
        if (trials) {
            if (*trials < 1) throw twotrap::ConfigError("--trials must be >= 1");
            cfg.trials = *trials;
        }
        if (seed) cfg.master_seed = *seed;
        if (out_dir) cfg.outputs = *out_dir;
        if (distances_path) {
            if (!std::filesystem::exists(*distances_path)) {
                throw twotrap::ConfigError("distance file '" + *distances_path + "' does not exist");
            }
            cfg.distances_path = *distances_path;
        }
        if (mode == twotrap::Mode::analyze && cfg.distances_path.empty()) {
            throw twotrap::ConfigError("--mode analyze requires --distances");
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        twotrap::set_workers(workers);
        const auto artifacts = twotrap::run_experiment(cfg, mode);
        twotrap::write_artifacts(artifacts, cfg.outputs);
        for (const auto& [name, content] : artifacts) std::cout << cfg.outputs << "/" << name << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
