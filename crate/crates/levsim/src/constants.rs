//! Physical constants, fixed at build time.
//!
//! CODATA 2018 recommended values; the Boltzmann constant is exact since
//! the 2019 SI redefinition. The Bohr magneton stands in for the electron
//! spin magnetic moment in all coupling estimates.

/// Boltzmann constant k_B (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Reduced Planck constant hbar (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Bohr magneton mu_B (J/T), used as the electron spin moment.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;

/// Proton magnetic moment mu_p (J/T).
pub const PROTON_MOMENT: f64 = 1.410_606_797_36e-26;

/// Gravitational acceleration g (m/s^2) used for g-normalized sensitivities.
pub const STANDARD_GRAVITY: f64 = 9.8;

/// Unified atomic mass unit u (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Helium-4 molecular mass (kg), 4.0026 u.
pub const HELIUM_MASS: f64 = 4.0026 * ATOMIC_MASS_UNIT;
