#include "twotrap/world.hpp"

#include <cmath>

namespace twotrap {

Atom* WorldState::find(int id) {
    for (auto& a : atoms) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

const Atom* WorldState::find(int id) const {
    for (const auto& a : atoms) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

bool WorldState::in_overlap(const Atom& atom) const {
    return vdt_scale > 0.0 && transverse_distance(vdt, atom.position) < vdt.waist;
}

WorldState initial_world(const TrapConfig& hdt, const TrapConfig& vdt) {
    validate(hdt, "hdt");
    validate(vdt, "vdt");
    if (hdt.axis != Axis::y) throw std::invalid_argument("hdt.axis must be y");
    if (vdt.axis != Axis::z) throw std::invalid_argument("vdt.axis must be z");
    WorldState w;
    w.hdt = hdt;
    w.vdt = vdt;
    return w;
}

}  // namespace twotrap
