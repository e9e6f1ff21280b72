//! Closed-form physics of a levitated micro-oscillator.
//!
//! Conventions used throughout the crate:
//!
//! * `gamma` is the angular energy-decay rate in 1/s. The amplitude decays
//!   at `gamma/2`; human-facing reports quote `gamma/(2*pi)` in Hz.
//! * All power spectral densities are one-sided.
//! * The thermal force noise on a mode of mass `m` is
//!   `S_FF = 4 m gamma k_B T` (N^2/Hz), the fluctuation-dissipation result
//!   for viscous damping.

use crate::constants::*;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{field} must be positive (got {value:e})")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must be non-negative (got {value:e})")]
    Negative { field: &'static str, value: f64 },
    #[error("{field} must be finite")]
    NotFinite { field: &'static str },
}

fn require_positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NotFinite { field });
    }
    if value <= 0.0 {
        return Err(ModelError::NotPositive { field, value });
    }
    Ok(())
}

fn require_non_negative(field: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NotFinite { field });
    }
    if value < 0.0 {
        return Err(ModelError::Negative { field, value });
    }
    Ok(())
}

/// Uniform solid sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    /// Diameter (m).
    pub diameter: f64,
    /// Material density (kg/m^3).
    pub density: f64,
}

impl Sphere {
    pub fn new(diameter: f64, density: f64) -> Result<Self, ModelError> {
        require_positive("diameter", diameter)?;
        require_positive("density", density)?;
        Ok(Self { diameter, density })
    }

    /// Radius (m).
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Mass (kg): rho * (pi/6) * d^3.
    pub fn mass(&self) -> f64 {
        self.density * PI / 6.0 * self.diameter.powi(3)
    }
}

/// Single mechanical mode of the levitated particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorMode {
    /// Resonance frequency omega0/(2*pi) (Hz).
    pub f0_hz: f64,
    /// Angular energy-decay rate (1/s).
    pub gamma: f64,
    /// Duffing coefficient (1/(m^2 s^2)); the restoring acceleration is
    /// omega0^2 x + epsilon x^3.
    pub duffing_epsilon: f64,
}

impl OscillatorMode {
    pub fn new(f0_hz: f64, gamma: f64) -> Result<Self, ModelError> {
        require_positive("f0_hz", f0_hz)?;
        require_non_negative("gamma", gamma)?;
        Ok(Self { f0_hz, gamma, duffing_epsilon: 0.0 })
    }

    /// Build from the linewidth convention used in reports, gamma/(2*pi) in Hz.
    pub fn from_gamma_over_2pi(f0_hz: f64, gamma_2pi_hz: f64) -> Result<Self, ModelError> {
        Self::new(f0_hz, TAU * gamma_2pi_hz)
    }

    pub fn with_duffing(mut self, epsilon: f64) -> Self {
        self.duffing_epsilon = epsilon;
        self
    }

    pub fn with_gamma_scale(mut self, factor: f64) -> Self {
        self.gamma *= factor;
        self
    }

    /// Angular resonance frequency (rad/s).
    pub fn omega0(&self) -> f64 {
        TAU * self.f0_hz
    }

    /// gamma/(2*pi) (Hz), the quantity quoted in reports.
    pub fn gamma_over_2pi(&self) -> f64 {
        self.gamma / TAU
    }

    /// Quality factor omega0/gamma; `None` for an undamped mode.
    pub fn quality_factor(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| self.omega0() / self.gamma)
    }

    /// Amplitude e-folding time of the energy, 1/gamma (s).
    pub fn decay_time(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| 1.0 / self.gamma)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("f0_hz", self.f0_hz)?;
        require_non_negative("gamma", self.gamma)?;
        if !self.duffing_epsilon.is_finite() {
            return Err(ModelError::NotFinite { field: "duffing_epsilon" });
        }
        Ok(())
    }
}

/// Thermal and gas environment of the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// Bath temperature (K).
    pub temperature: f64,
    /// Residual gas pressure (Pa).
    pub gas_pressure: f64,
    /// Molecular mass of the residual gas (kg).
    pub gas_molecular_mass: f64,
}

impl Environment {
    /// Helium atmosphere at the given temperature and pressure.
    pub fn helium(temperature: f64, gas_pressure: f64) -> Result<Self, ModelError> {
        let env = Self { temperature, gas_pressure, gas_molecular_mass: HELIUM_MASS };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("temperature", self.temperature)?;
        require_non_negative("gas_pressure", self.gas_pressure)?;
        require_positive("gas_molecular_mass", self.gas_molecular_mass)?;
        Ok(())
    }

    /// Mean molecular speed of the ideal gas, sqrt(8 k_B T / (pi m_gas)) (m/s).
    pub fn mean_gas_speed(&self) -> f64 {
        (8.0 * BOLTZMANN * self.temperature / (PI * self.gas_molecular_mass)).sqrt()
    }
}

/// One-sided thermal force noise on a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceNoise {
    /// S_FF (N^2/Hz).
    pub psd: f64,
    /// sqrt(S_FF) (N/sqrt(Hz)).
    pub asd: f64,
}

/// One-sided acceleration-equivalent noise on a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelNoise {
    /// S_aa ((m/s^2)^2/Hz).
    pub psd: f64,
    /// sqrt(S_aa) ((m/s^2)/sqrt(Hz)).
    pub asd: f64,
    /// sqrt(S_aa) normalized to standard gravity (g/sqrt(Hz)).
    pub asd_g: f64,
}

/// Thermal force noise S_FF = 4 m gamma k_B T (one-sided).
pub fn force_noise_density(mass: f64, gamma: f64, temperature: f64) -> ForceNoise {
    let psd = 4.0 * mass * gamma * BOLTZMANN * temperature;
    ForceNoise { psd, asd: psd.sqrt() }
}

/// Acceleration-equivalent thermal noise S_aa = 4 gamma k_B T / m (one-sided).
pub fn accel_noise_density(mass: f64, gamma: f64, temperature: f64) -> AccelNoise {
    let psd = 4.0 * gamma * BOLTZMANN * temperature / mass;
    let asd = psd.sqrt();
    AccelNoise { psd, asd, asd_g: asd / STANDARD_GRAVITY }
}

/// Molecular-flow gas damping gamma = (16/pi) (P / (nu R rho)) (1/s).
pub fn gas_damping(sphere: &Sphere, env: &Environment) -> f64 {
    let nu = env.mean_gas_speed();
    16.0 / PI * env.gas_pressure / (nu * sphere.radius() * sphere.density)
}

/// Equipartition position variance k_B T / (m omega0^2) (m^2).
pub fn equipartition_x2(mass: f64, f0_hz: f64, temperature: f64) -> f64 {
    BOLTZMANN * temperature / (mass * (TAU * f0_hz).powi(2))
}

/// Both sides of the oscillation-coherence comparison, in Hz.
///
/// A mode can complete coherent oscillations while thermally decohering only
/// if omega0^2/gamma exceeds k_B T / hbar; both sides are reported divided by
/// 2*pi so they read as frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceCheck {
    /// omega0 Q / (2*pi) = f0 Q (Hz).
    pub omega0_q_over_2pi_hz: f64,
    /// k_B T / (2*pi*hbar) = k_B T / h (Hz).
    pub kt_over_2pi_hbar_hz: f64,
    pub satisfied: bool,
}

/// Evaluate omega0^2/gamma > k_B T / hbar for a damped mode.
pub fn coherence_criterion(mode: &OscillatorMode, temperature: f64) -> Option<CoherenceCheck> {
    let q = mode.quality_factor()?;
    let lhs = mode.f0_hz * q;
    let rhs = BOLTZMANN * temperature / (TAU * HBAR);
    Some(CoherenceCheck { omega0_q_over_2pi_hz: lhs, kt_over_2pi_hbar_hz: rhs, satisfied: lhs > rhs })
}

/// Thermal occupation and decoherence rate of a mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalDecoherence {
    /// Mean phonon occupation k_B T / (hbar omega0).
    pub n_bar: f64,
    /// Thermal decoherence rate n_bar * gamma (1/s).
    pub gamma_th: f64,
}

pub fn thermal_decoherence(mode: &OscillatorMode, temperature: f64) -> ThermalDecoherence {
    let n_bar = BOLTZMANN * temperature / (HBAR * mode.omega0());
    ThermalDecoherence { n_bar, gamma_th: n_bar * mode.gamma }
}

/// Zero-point motion sqrt(hbar / (m omega0)) (m).
pub fn zero_point_motion(mass: f64, f0_hz: f64) -> f64 {
    (HBAR / (mass * TAU * f0_hz)).sqrt()
}

/// Inputs for spin-oscillator coupling estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMechanicsSetup {
    /// Magnetic field gradient (T/m).
    pub gradient: f64,
    /// Spin magnetic moment (J/T); commonly `BOHR_MAGNETON` or `PROTON_MOMENT`.
    pub spin_moment: f64,
    /// Spin coherence time T2 (s).
    pub spin_t2: f64,
    /// Mechanical mode the spin couples to.
    pub mode: OscillatorMode,
    /// Mode mass (kg).
    pub mass: f64,
    /// Bath temperature (K).
    pub temperature: f64,
}

impl SpinMechanicsSetup {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("gradient", self.gradient)?;
        require_positive("spin_moment", self.spin_moment)?;
        require_positive("spin_t2", self.spin_t2)?;
        self.mode.validate()?;
        require_positive("gamma", self.mode.gamma)?;
        require_positive("mass", self.mass)?;
        require_positive("temperature", self.temperature)?;
        Ok(())
    }
}

/// Single-phonon spin-oscillator coupling rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinCoupling {
    /// lambda = G x_zpl mu / hbar (rad/s).
    pub lambda: f64,
    /// lambda/(2*pi) (Hz).
    pub lambda_over_2pi_hz: f64,
}

pub fn spin_coupling(setup: &SpinMechanicsSetup) -> SpinCoupling {
    let x_zpl = zero_point_motion(setup.mass, setup.mode.f0_hz);
    let lambda = setup.gradient * x_zpl * setup.spin_moment / HBAR;
    SpinCoupling { lambda, lambda_over_2pi_hz: lambda / TAU }
}

/// Spin-oscillator cooperativity C = lambda^2 T2 Q hbar / (k_B T).
pub fn cooperativity(setup: &SpinMechanicsSetup) -> Option<f64> {
    let q = setup.mode.quality_factor()?;
    let lambda = spin_coupling(setup).lambda;
    Some(lambda * lambda * setup.spin_t2 * q * HBAR / (BOLTZMANN * setup.temperature))
}

/// Static force on a spin moment in a field gradient, F = G mu (N).
pub fn spin_force(gradient: f64, spin_moment: f64) -> f64 {
    gradient * spin_moment
}

/// Largest mode mass for which the single-spin force stands above the thermal
/// force noise in a 1 Hz band: m* = (G mu)^2 / (4 gamma k_B T) (kg).
pub fn detectable_mass_threshold(
    gradient: f64,
    spin_moment: f64,
    gamma: f64,
    temperature: f64,
) -> f64 {
    let f = spin_force(gradient, spin_moment);
    f * f / (4.0 * gamma * BOLTZMANN * temperature)
}
