#pragma once

#include <map>
#include <string>
#include <vector>

#include "twotrap/config.hpp"
#include "twotrap/sequence.hpp"

namespace twotrap {

// analyze: histogram and comb fit of an external distance file, no simulation.
enum class Mode { rearrange, join, fluorescence, analyze };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

// File name -> contents, written only after every artifact is built.
using Artifacts = std::map<std::string, std::string>;

Artifacts run_experiment(const ExperimentConfig& cfg, Mode mode);

// Writes artifacts into `dir`; on failure removes whatever it wrote and
// rethrows.
void write_artifacts(const Artifacts& artifacts, const std::string& dir);

std::string trials_csv(const std::vector<TrialRecord>& records);
std::string trace_csv(const FluorescenceTrace& trace);

// Shortest round-trip decimal; "nan" for NaN.
std::string format_number(double v);

}  // namespace twotrap
