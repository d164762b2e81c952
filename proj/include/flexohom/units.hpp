#pragma once

// Internal unit system: length [um], stress/energy density [GPa], potential [V].
// Everything else is derived so that energy densities come out in GPa.
// Multiply a value given in the unit on the right to obtain internal units.
namespace flexohom::units {

inline constexpr double micrometre = 1.0;
inline constexpr double gigapascal = 1.0;
inline constexpr double volt = 1.0;

/// C/m^2 (piezoelectric constants, electric displacement, polarization).
inline constexpr double coulomb_per_m2 = 1.0e-3;
/// nC/(V m) (permittivities).
inline constexpr double nanocoulomb_per_volt_metre = 1.0e-6;
/// uC/m (flexoelectric constants).
inline constexpr double microcoulomb_per_metre = 1.0e-3;
/// V/m (electric field).
inline constexpr double volt_per_metre = 1.0e-6;

/// Vacuum permittivity in nC/(V m).
inline constexpr double vacuum_permittivity_nC_per_Vm = 8.8541878128e-3;
/// Vacuum permittivity in internal units.
inline constexpr double vacuum_permittivity = vacuum_permittivity_nC_per_Vm * nanocoulomb_per_volt_metre;

}  // namespace flexohom::units
