#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "twotrap/stochastic.hpp"
#include "twotrap/world.hpp"

namespace twotrap {

struct MolassesEpisode {
    double duration = 1.0;
    double pair_collision_rate = 20.0;
    double single_survival_lifetime = 60.0;  // +inf disables lifetime losses
    double fluorescence_per_atom = 1.0;
    double background_level = 0.0;
    double pair_loss_branching = 1.0;
};

void validate(const MolassesEpisode& ep);

// Continuous-time loss dynamics of the atoms sharing one well, up to
// `horizon`. Each pair collides at pair_collision_rate and each atom decays at
// 1/single_survival_lifetime; occupancy is re-evaluated after every loss.
// Returns per-atom loss times, +inf for atoms alive at the horizon.
std::vector<double> simulate_well(int n_atoms, const MolassesEpisode& ep, double horizon, RngStream& stream);

// Light-induced pair losses for the atoms of `state`, all of which must be
// HDT-bound. Advances the clock by ep.duration.
void apply_molasses(WorldState& state, const MolassesEpisode& ep, RngStream& stream);

// Probability that at least one of `wells` holds two or more of `n_atoms`
// uniformly and independently placed atoms.
double expected_multi_occupancy(long n_atoms, long wells);

enum class Placement { uniform, distinct };

// Timing of one fluorescence shot (s). Atoms fluoresce only while the
// molasses is on; after switch_off the trap is empty and only background
// remains.
struct FluorescenceProtocol {
    double molasses_on = 0.26;
    double switch_off = 0.56;
    double end = 0.65;
    double bin_width = 0.005;
};

void validate(const FluorescenceProtocol& p);

struct FluorescenceTrace {
    std::vector<std::pair<double, double>> time_bins;
    std::vector<double> mean_signal;
    long n_shots = 0;
    double mean_initial_atoms = 0.0;
};

struct FluorescenceStudy {
    double mean_atoms = 19.0;  // Poisson mean of the loaded atom number
    long wells = 25;
    long n_shots = 100;
    Placement placement = Placement::uniform;
    MolassesEpisode episode{};
    FluorescenceProtocol protocol{};
};

// Shot-parallel; shot i draws from RngStream(master_seed, i). Bit-identical
// for any worker count.
FluorescenceTrace fluorescence_trace(const FluorescenceStudy& study, std::uint64_t master_seed);
FluorescenceTrace fluorescence_trace_serial(const FluorescenceStudy& study, std::uint64_t master_seed);

}  // namespace twotrap
