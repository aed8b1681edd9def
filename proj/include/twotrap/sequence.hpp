#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "twotrap/stochastic.hpp"
#include "twotrap/world.hpp"

namespace twotrap {

namespace step {

struct LoadAtoms {
    int count = 2;
    double spread = 80.0;
    friend bool operator==(const LoadAtoms&, const LoadAtoms&) = default;
};

struct Image {
    double exposure = 1.0;
    friend bool operator==(const Image&, const Image&) = default;
};

// Conveyor-belt move: shifts the whole HDT lattice so the selected atom
// lands at target_y.
struct TransportHDT {
    int atom = 1;
    double target_y = 0.0;
    double duration = 5e-4;
    friend bool operator==(const TransportHDT&, const TransportHDT&) = default;
};

// Binds the selected atom (and anything else in the overlap region) to the
// VDT and lifts it by `lift` along +z.
struct ExtractVDT {
    int atom = 1;
    double lift = 57.0;
    double duration = 0.03;
    friend bool operator==(const ExtractVDT&, const ExtractVDT&) = default;
};

struct TiltHDT {
    double delta_x = 20.0;
    double duration = 0.05;
    friend bool operator==(const TiltHDT&, const TiltHDT&) = default;
};

struct TransportVDT {
    double target_z = 0.0;
    double duration = 0.03;
    friend bool operator==(const TransportVDT&, const TransportVDT&) = default;
};

struct MergeRadial {
    double duration = 0.05;
    friend bool operator==(const MergeRadial&, const MergeRadial&) = default;
};

struct RampVDT {
    double final_scale = 0.0;
    double duration = 0.01;
    friend bool operator==(const RampVDT&, const RampVDT&) = default;
};

struct Molasses {
    double duration = 1.0;
    friend bool operator==(const Molasses&, const Molasses&) = default;
};

}  // namespace step

using Step = std::variant<step::LoadAtoms, step::Image, step::TransportHDT, step::ExtractVDT, step::TiltHDT,
                          step::TransportVDT, step::MergeRadial, step::RampVDT, step::Molasses>;

std::string_view step_name(const Step& s);

// Declared parameter bounds.
namespace limits {
inline constexpr int max_atoms = 64;
inline constexpr double max_spread = 1000.0;
inline constexpr double max_conveyor = 5000.0;
inline constexpr double max_tilt = 40.0;
inline constexpr double max_vdt_travel = 60.0;
}  // namespace limits

struct Sequence {
    std::string name = "unnamed";
    double target_distance = 0.0;
    std::vector<Step> steps;

    friend bool operator==(const Sequence&, const Sequence&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, std::string token, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& token() const { return token_; }

private:
    int line_;
    int column_;
    std::string token_;
};

class RangeError : public std::runtime_error {
public:
    RangeError(int line, const std::string& message) : std::runtime_error(message), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Line-based DSL:
//   # comment
//   sequence name=join target=0.0
//   transport_hdt atom=1 y=0.0 dur=0.0005
Sequence parse_sequence(std::string_view text);
Sequence load_sequence_file(const std::string& path);
std::string render_sequence(const Sequence& seq);

// Throws RangeError when a parameter violates its declared bound.
void validate(const Step& s, int line = 0);

struct Measurement {
    struct Position {
        int atom = 0;
        double y = 0.0;
    };
    struct Distance {
        int atom_a = 0;
        int atom_b = 0;
        double value = 0.0;
    };
    double time = 0.0;
    std::vector<Position> positions;
    std::vector<Distance> distances;

    std::optional<double> distance(int a, int b) const;
};

std::optional<Measurement> execute_step(WorldState& state, const Step& s, const NoiseModel& noise, RngStream& stream);

struct TrialOptions {
    double post_selection_min_separation = 10.0;
    // Run with only this atom id (1 or 2) present, for single-atom loss controls.
    std::optional<int> only_atom;
};

struct TrialRecord {
    std::uint64_t trial_index = 0;
    double initial_sep = std::numeric_limits<double>::quiet_NaN();
    double final_sep_measured = std::numeric_limits<double>::quiet_NaN();
    // Signed y2 - y1 and HDT well-index difference right after the last
    // completed reinsertion; NaN / 0 when unavailable.
    double insert_sep_true = std::numeric_limits<double>::quiet_NaN();
    long insert_well_sep = 0;
    bool insert_valid = false;
    bool same_well = false;
    bool alive_1 = false;
    bool alive_2 = false;
    bool post_selected = false;
    int skipped_steps = 0;
};

// Requires the first step to be load_atoms. Steps whose atom is lost or in an
// incompatible trap are skipped and counted, as in the lab.
TrialRecord run_trial(const Sequence& seq, const WorldState& initial, const NoiseModel& noise, RngStream& stream,
                      const TrialOptions& opts = {});

}  // namespace twotrap
