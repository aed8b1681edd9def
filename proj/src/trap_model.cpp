#include "twotrap/trap_model.hpp"

#include <cmath>
#include <numbers>

namespace twotrap {

std::string to_string(TrapId id) { return id == TrapId::hdt ? "hdt" : "vdt"; }

std::string to_string(Axis axis) { return axis == Axis::y ? "y" : "z"; }

TrapConfig default_hdt() {
    TrapConfig cfg;
    cfg.wavelength = 1.064;
    cfg.waist = 19.0;
    cfg.depth = 0.8;
    cfg.axis = Axis::y;
    return cfg;
}

TrapConfig default_vdt() {
    TrapConfig cfg;
    cfg.wavelength = 1.030;
    cfg.waist = 10.0;
    cfg.depth = 1.5;
    cfg.axis = Axis::z;
    return cfg;
}

void validate(const TrapConfig& cfg, const std::string& name) {
    if (!(cfg.wavelength > 0.0) || !std::isfinite(cfg.wavelength)) {
        throw std::invalid_argument(name + ".wavelength must be > 0");
    }
    if (!(cfg.waist > 0.0) || !std::isfinite(cfg.waist)) {
        throw std::invalid_argument(name + ".waist must be > 0");
    }
    if (!(cfg.depth >= 0.0) || !std::isfinite(cfg.depth)) {
        throw std::invalid_argument(name + ".depth must be >= 0");
    }
    if (!std::isfinite(cfg.axial_phase_offset)) {
        throw std::invalid_argument(name + ".axial_phase_offset must be finite");
    }
    for (double c : cfg.transverse_center) {
        if (!std::isfinite(c)) throw std::invalid_argument(name + ".transverse_center must be finite");
    }
}

double axial_coordinate(const TrapConfig& cfg, const Vec3& point) {
    return cfg.axis == Axis::y ? point[1] : point[2];
}

double transverse_distance(const TrapConfig& cfg, const Vec3& point) {
    const double a = point[0] - cfg.transverse_center[0];
    const double b = (cfg.axis == Axis::y ? point[2] : point[1]) - cfg.transverse_center[1];
    return std::hypot(a, b);
}

double potential_at(const TrapConfig& cfg, const Vec3& point) {
    // Reduce modulo the well spacing first so the lattice is exactly periodic.
    const double rel = std::remainder(axial_coordinate(cfg, point) - cfg.axial_phase_offset, cfg.well_spacing());
    const double rho = transverse_distance(cfg, point);
    const double c = std::cos(2.0 * std::numbers::pi * rel / cfg.wavelength);
    return -cfg.depth * std::exp(-2.0 * rho * rho / (cfg.waist * cfg.waist)) * c * c;
}

double total_potential(std::span<const ScaledTrap> traps, const Vec3& point) {
    double sum = 0.0;
    for (const auto& t : traps) {
        if (t.scale < 0.0 || t.scale > 1.0) throw std::invalid_argument("trap scale factor outside [0, 1]");
        if (t.scale == 0.0) continue;
        sum += t.scale * potential_at(*t.trap, point);
    }
    return sum;
}

WellIndex nearest_well(const TrapConfig& cfg, double axial_coord, TrapId id) {
    const double t = (axial_coord - cfg.axial_phase_offset) / cfg.well_spacing();
    return {id, static_cast<long>(std::ceil(t - 0.5))};
}

double axial_curvature(const TrapConfig& cfg) {
    const double k = 2.0 * std::numbers::pi / cfg.wavelength;
    return 2.0 * cfg.depth * k * k;
}

double radial_curvature(const TrapConfig& cfg) { return 4.0 * cfg.depth / (cfg.waist * cfg.waist); }

double stiffness_ratio(const TrapConfig& cfg) {
    const double r = 2.0 * std::numbers::pi * cfg.waist / cfg.wavelength;
    return r * r / 2.0;
}

}  // namespace twotrap
