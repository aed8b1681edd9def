#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>

// Standing-wave Gaussian dipole traps. Lengths in um, energies in mK
// (temperature equivalent, U/k_B).

namespace twotrap {

using Vec3 = std::array<double, 3>;  // (x, y, z)

enum class Axis { y, z };

enum class TrapId { hdt, vdt };

std::string to_string(TrapId id);
std::string to_string(Axis axis);

struct TrapConfig {
    double wavelength = 1.064;
    double waist = 19.0;
    double depth = 0.8;
    Axis axis = Axis::y;
    // Position of well 0 along the axis.
    double axial_phase_offset = 0.0;
    // Beam axis location in the plane normal to the axis, ordered (x, z) for
    // an axis along y and (x, y) for an axis along z.
    std::array<double, 2> transverse_center{0.0, 0.0};

    double well_spacing() const { return wavelength / 2.0; }
    double well_center(long index) const { return axial_phase_offset + static_cast<double>(index) * well_spacing(); }
};

// Measured parameters of the two traps.
TrapConfig default_hdt();
TrapConfig default_vdt();

// Throws std::invalid_argument naming the offending field.
void validate(const TrapConfig& cfg, const std::string& name = "trap");

struct WellIndex {
    TrapId trap = TrapId::hdt;
    long index = 0;

    friend bool operator==(const WellIndex&, const WellIndex&) = default;
};

double axial_coordinate(const TrapConfig& cfg, const Vec3& point);
double transverse_distance(const TrapConfig& cfg, const Vec3& point);

double potential_at(const TrapConfig& cfg, const Vec3& point);

struct ScaledTrap {
    const TrapConfig* trap = nullptr;
    double scale = 1.0;
};

// Sum of scaled single-trap potentials; cross-interference between traps of
// different wavelength is ignored.
double total_potential(std::span<const ScaledTrap> traps, const Vec3& point);

// Index of the well closest to `axial_coord`; exact ties go to the lower index.
WellIndex nearest_well(const TrapConfig& cfg, double axial_coord, TrapId id = TrapId::hdt);

// Axial over radial curvature at a well center: (2 pi waist / wavelength)^2 / 2.
double stiffness_ratio(const TrapConfig& cfg);

// Analytic second derivatives of the potential at a well center on the axis.
double axial_curvature(const TrapConfig& cfg);
double radial_curvature(const TrapConfig& cfg);

}  // namespace twotrap
