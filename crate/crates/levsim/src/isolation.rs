//! Passive vibration-isolation chain budgeting.
//!
//! Each stage is a mass on a soft suspension of characteristic frequency
//! `f_c`. Above resonance an undamped stage transmits
//! `|H(f)| = 1 / ((f/f_c)^2 - 1)`, so its isolation in dB is
//! `20 log10((f/f_c)^2 - 1)`. Stages in cascade multiply, so their dB values
//! add. Stage load masses are carried for reporting; the stiffness-decoupled
//! cascade approximation ignores mass loading between stages.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IsolationError {
    #[error(
        "undamped transmissibility diverges at or below the stage corner \
         ({f_hz} Hz <= {f_c_hz} Hz); set a finite stage quality to evaluate there"
    )]
    BelowCorner { f_hz: f64, f_c_hz: f64 },
    #[error("stage list is empty")]
    NoStages,
    #[error("stage {index}: {field} must be positive")]
    BadStage { index: usize, field: &'static str },
}

/// One suspension stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationStage {
    /// Suspended load (kg); reported, not used by the cascade approximation.
    pub load_mass: f64,
    /// Characteristic (corner) frequency (Hz).
    pub char_frequency_hz: f64,
    /// Resonance quality; `None` models the undamped limit.
    pub quality: Option<f64>,
}

impl IsolationStage {
    pub fn undamped(load_mass: f64, char_frequency_hz: f64) -> Self {
        Self { load_mass, char_frequency_hz, quality: None }
    }

    fn check(&self, index: usize) -> Result<(), IsolationError> {
        if !(self.load_mass > 0.0) {
            return Err(IsolationError::BadStage { index, field: "load_mass" });
        }
        if !(self.char_frequency_hz > 0.0) {
            return Err(IsolationError::BadStage { index, field: "char_frequency_hz" });
        }
        if let Some(q) = self.quality {
            if !(q > 0.0) {
                return Err(IsolationError::BadStage { index, field: "quality" });
            }
        }
        Ok(())
    }
}

/// Amplitude transmissibility |H(f)| of one stage.
///
/// Undamped stages are only defined away from the corner; with a finite
/// quality the damped magnitude is returned everywhere.
pub fn stage_transmissibility(stage: &IsolationStage, f_hz: f64) -> Result<f64, IsolationError> {
    stage.check(0)?;
    let r = f_hz / stage.char_frequency_hz;
    match stage.quality {
        None => {
            if r <= 1.0 {
                return Err(IsolationError::BelowCorner {
                    f_hz,
                    f_c_hz: stage.char_frequency_hz,
                });
            }
            Ok(1.0 / (r * r - 1.0))
        }
        Some(q) => {
            let dr = r / q;
            Ok(((1.0 + dr * dr) / ((1.0 - r * r).powi(2) + dr * dr)).sqrt())
        }
    }
}

/// Isolation of one stage in dB of amplitude-squared response,
/// `-20 log10 |H(f)|`.
pub fn stage_isolation_db(stage: &IsolationStage, f_hz: f64) -> Result<f64, IsolationError> {
    Ok(-20.0 * stage_transmissibility(stage, f_hz)?.log10())
}

/// Total isolation of a cascade at `f_hz`: the per-stage dB values summed.
pub fn chain_isolation_db(stages: &[IsolationStage], f_hz: f64) -> Result<f64, IsolationError> {
    if stages.is_empty() {
        return Err(IsolationError::NoStages);
    }
    let mut total = 0.0;
    for (index, stage) in stages.iter().enumerate() {
        stage.check(index)?;
        total += stage_isolation_db(stage, f_hz)?;
    }
    Ok(total)
}

/// Residual force PSD (N^2/Hz) on a suspended mass behind the chain, given a
/// one-sided floor acceleration PSD ((m/s^2)^2/Hz) at `f_hz`.
pub fn residual_vibration_psd(
    stages: &[IsolationStage],
    floor_accel_psd: f64,
    f_hz: f64,
    mass: f64,
) -> Result<f64, IsolationError> {
    let db = chain_isolation_db(stages, f_hz)?;
    Ok(floor_accel_psd * 10f64.powf(-db / 10.0) * mass * mass)
}
