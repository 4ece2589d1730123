#pragma once

#include <cmath>
#include <numbers>

#include "wigner/errors.hpp"

namespace wigner {

namespace si {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double electron_charge = 1.602176634e-19;  // C
inline constexpr double electron_mass = 9.1093837015e-31;   // kg
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double mev = 1.602176634e-22;          // J
}  // namespace si

/// Host material and transverse confinement.
struct MaterialParams {
  double effective_mass = 0.067 * si::electron_mass;
  double permittivity = 12.9 * si::vacuum_permittivity;
  double confinement_omega = 0.0;  // rad/s; 0 means "pick Ω so that r_Ω = 10"

  /// e²/(4πε), in J·m.
  double coulomb_constant() const {
    return si::electron_charge * si::electron_charge / (4.0 * std::numbers::pi * permittivity);
  }

  double bohr_radius() const {
    return 4.0 * std::numbers::pi * permittivity * si::hbar * si::hbar /
           (effective_mass * si::electron_charge * si::electron_charge);
  }

  void validate() const {
    if (!(effective_mass > 0.0) || !(permittivity > 0.0) || !(confinement_omega > 0.0))
      throw InvalidArgument("material parameters must be strictly positive");
  }
};

/// Natural scales of the confined chain.
///
/// Lengths are measured in r0, defined by ½m*Ω²r0² = e²/(4πε r0). Energies are
/// measured in E0 = e²/(4πε r0) and imaginary time in √2/Ω, which turns the
/// action into ħ√r_Ω times a dimensionless functional.
struct DimensionlessUnits {
  double r0 = 0.0;       // m
  double r_omega = 0.0;  // r0 / a_B
  double nu = 1.0;       // electrons per r0
  double omega = 0.0;    // rad/s, carried for SI conversion

  /// E0 = e²/(4πε r0) in joules.
  double energy_unit() const { return 0.5 * hbar_omega() * std::sqrt(2.0 * r_omega); }
  /// ħΩ in joules.
  double hbar_omega() const { return si::hbar * omega; }
  /// ħΩ expressed in E0.
  double hbar_omega_in_e0() const { return std::sqrt(2.0 / r_omega); }
  /// Seconds per unit of dimensionless imaginary time.
  double time_unit() const { return std::numbers::sqrt2 / omega; }
};

/// Ω that places r0 at `r_omega` Bohr radii for the given host material.
inline double omega_for_r_omega(const MaterialParams& material, double r_omega) {
  if (!(r_omega > 0.0)) throw InvalidArgument("r_omega must be positive");
  const double r0 = r_omega * material.bohr_radius();
  return std::sqrt(2.0 * material.coulomb_constant() / (material.effective_mass * r0 * r0 * r0));
}

/// GaAs-like material with Ω chosen so that r_Ω = 10.
inline MaterialParams gaas_material(double r_omega = 10.0) {
  MaterialParams m;
  m.confinement_omega = omega_for_r_omega(m, r_omega);
  return m;
}

inline DimensionlessUnits derive_units(const MaterialParams& material, double nu = 1.0) {
  material.validate();
  if (!(nu > 0.0)) throw InvalidArgument("density nu must be positive");
  DimensionlessUnits u;
  const double w = material.confinement_omega;
  u.r0 = std::cbrt(2.0 * material.coulomb_constant() / (material.effective_mass * w * w));
  u.r_omega = u.r0 / material.bohr_radius();
  u.nu = nu;
  u.omega = w;
  return u;
}

}  // namespace wigner
