//! Reference configurations for the instrument this crate models: a
//! microdiamond levitated above a superconducting chip in a dilution
//! refrigerator, read out interferometrically and actuated by coil fields.

use crate::isolation::IsolationStage;
use crate::physics::{Environment, OscillatorMode, SpinMechanicsSetup, Sphere};

/// Levitated particle: 9.8 um diamond sphere.
pub fn sphere_default() -> Sphere {
    Sphere::new(9.8e-6, 1100.0).expect("static preset")
}

/// Vertical center-of-mass mode, 11.7 Hz, gamma/2pi = 0.59 uHz.
pub fn mode1() -> OscillatorMode {
    OscillatorMode::from_gamma_over_2pi(11.7, 0.59e-6).expect("static preset")
}

/// Lateral mode at the low end of its observed range, 8.4 Hz.
pub fn mode2_low() -> OscillatorMode {
    OscillatorMode::from_gamma_over_2pi(8.4, 2.6e-6).expect("static preset")
}

/// Lateral mode at the high end of its observed range, 8.7 Hz.
pub fn mode2_high() -> OscillatorMode {
    OscillatorMode::from_gamma_over_2pi(8.7, 2.6e-6).expect("static preset")
}

/// Helium exchange gas at the given temperature and pressure.
pub fn helium(temperature: f64, pressure: f64) -> Environment {
    Environment::helium(temperature, pressure).expect("static preset")
}

/// Operating point used for the headline dissipation measurements:
/// 3 K bath, 2e-7 Pa residual helium.
pub fn environment_default() -> Environment {
    helium(3.0, 2.0e-7)
}

/// Three-stage passive vibration isolation chain, softest stage last.
pub fn isolation_stages() -> Vec<IsolationStage> {
    vec![
        IsolationStage::undamped(7.0, 1.4),
        IsolationStage::undamped(1.6, 2.5),
        IsolationStage::undamped(0.08, 4.6),
    ]
}

/// Spin-mechanics coupling point: 1e4 T/m gradient on an electron spin,
/// 1 s coherence, 0.1 ug particle, 100 Hz mode in a 10 mK bath.
pub fn spin_default() -> SpinMechanicsSetup {
    SpinMechanicsSetup {
        gradient: 1.0e4,
        spin_moment: crate::constants::BOHR_MAGNETON,
        spin_t2: 1.0,
        mode: OscillatorMode::from_gamma_over_2pi(100.0, 0.59e-6).expect("static preset"),
        mass: 1.0e-16,
        temperature: 0.01,
    }
}
