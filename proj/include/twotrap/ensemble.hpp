#pragma once

#include <cstdint>
#include <vector>

#include "twotrap/sequence.hpp"

namespace twotrap {

// Trial i runs on RngStream(master_seed, i); records come back in trial order.
std::vector<TrialRecord> run_ensemble(const Sequence& seq, const WorldState& initial, const NoiseModel& noise,
                                      std::uint64_t trials, std::uint64_t master_seed, const TrialOptions& opts = {});

// Single-threaded reference for run_ensemble.
std::vector<TrialRecord> run_ensemble_serial(const Sequence& seq, const WorldState& initial, const NoiseModel& noise,
                                             std::uint64_t trials, std::uint64_t master_seed,
                                             const TrialOptions& opts = {});

// Sets the OpenMP worker count; 0 keeps the runtime default. Returns the
// number of workers that will be used.
int set_workers(int workers);

}  // namespace twotrap
