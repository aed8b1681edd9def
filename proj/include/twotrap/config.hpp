#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twotrap/collision.hpp"
#include "twotrap/sequence.hpp"
#include "twotrap/stochastic.hpp"
#include "twotrap/trap_model.hpp"

namespace twotrap {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AnalysisSettings {
    double confidence = 0.6827;
    double coarse_bin = 1.064;
    double fine_bin = 1.064 / 12.0;
    // Parameter errors fed to the first-order p_theor sensitivity.
    double width_error = 0.11;
    double noloss_error = 0.055;
};

struct FluorescenceSettings {
    std::vector<double> mean_atoms{3.0, 19.0};
    long wells = 25;
    long shots = 100;
    Placement placement = Placement::uniform;
    double fluorescence_per_atom = 1.0;
    double background_level = 0.2;
    FluorescenceProtocol protocol{};
};

struct ExperimentConfig {
    TrapConfig hdt = default_hdt();
    TrapConfig vdt = default_vdt();
    NoiseModel noise = default_noise();
    std::string sequence_path;
    Sequence sequence;
    std::uint64_t trials = 1;
    std::uint64_t master_seed = 0;
    double post_selection_min_separation = 10.0;
    std::string outputs = "out";
    // External final-distance CSV for analyze mode; empty when unused.
    std::string distances_path;
    AnalysisSettings analysis{};
    FluorescenceSettings fluorescence{};
};

// Parses and validates a JSON experiment configuration. Relative paths are
// resolved against the directory of the file. In strict mode unknown keys
// are rejected and master_seed is mandatory.
ExperimentConfig load_config(const std::string& path, bool strict = true);
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir, bool strict = true);

// Re-reads the sequence file (used after --sequence overrides the path).
void reload_sequence(ExperimentConfig& cfg, const std::string& path);

MolassesEpisode fluorescence_episode(const ExperimentConfig& cfg);

}  // namespace twotrap
