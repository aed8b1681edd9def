#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twotrap/trap_model.hpp"

namespace twotrap {

struct Atom {
    int id = 0;
    Vec3 position{0.0, 0.0, 0.0};
    bool alive = true;
    // False for an atom removed before the sequence (single-atom control runs).
    bool present = true;
    std::optional<TrapId> bound_trap;
    // Well index in the bound trap's lattice.
    long well = 0;
};

// Lab frame: HDT along y at transverse (x, z) = hdt.transverse_center, VDT
// along z at transverse (x, y) = vdt.transverse_center. The conveyor and the
// VDT mirror stage move the lattices by shifting axial_phase_offset.
struct WorldState {
    std::vector<Atom> atoms;
    TrapConfig hdt = default_hdt();
    TrapConfig vdt = default_vdt();
    double vdt_scale = 1.0;
    double clock = 0.0;
    bool manipulation_losses_applied = false;

    Atom* find(int id);
    const Atom* find(int id) const;
    double hdt_x() const { return hdt.transverse_center[0]; }
    double hdt_z() const { return hdt.transverse_center[1]; }
    double vdt_x() const { return vdt.transverse_center[0]; }
    double vdt_y() const { return vdt.transverse_center[1]; }
    // An atom is in the overlap region when it sits within one VDT waist of
    // the VDT axis and the VDT is on.
    bool in_overlap(const Atom& atom) const;
};

WorldState initial_world(const TrapConfig& hdt = default_hdt(), const TrapConfig& vdt = default_vdt());

// A step that cannot act on the current state.
class StepError : public std::runtime_error {
public:
    enum class Kind { no_alive_atom, incompatible_binding };

    StepError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace twotrap
