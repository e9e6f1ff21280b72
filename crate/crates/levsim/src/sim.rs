//! Stochastic time-domain simulation of one levitated mode.
//!
//! Equation of motion:
//!
//! ```text
//! m x'' + m gamma x' + m omega0^2 x + m epsilon x^3 = F_fluc(t) + F_fb(t)
//! ```
//!
//! The deterministic part advances by velocity Verlet with the viscous term
//! split half explicit, half implicit, which reduces to plain (symplectic)
//! velocity Verlet at gamma = 0. The fluctuating force is stationary white
//! noise of one-sided PSD `4 m gamma k_B T` plus any configured extra force
//! PSD; each step holds one Gaussian draw of variance `S_total/(2 dt)`
//! constant across the step. Identical configs and seeds reproduce output
//! bit for bit.
//!
//! Feedback mixes the measured position down with a software lock-in
//! ([`crate::lockin`]) and synthesizes a force at the carrier: a fixed-
//! amplitude drive locked to the velocity phase (excitation) or a viscous
//! force proportional to the estimated velocity (cold damping). The force is
//! clamped to the coil limit in either mode.

use crate::constants::BOLTZMANN;
use crate::lockin::Demodulator;
use crate::physics::{equipartition_x2, OscillatorMode};
use crate::series::{fmt_sci, TimeSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("config: {0}")]
    InvalidConfig(String),
    #[error(
        "time step too coarse: dt * omega0 = {product:.3} must stay below 0.1 \
         (dt = {dt:e} s at f0 = {f0_hz} Hz)"
    )]
    ResolutionGuard { dt: f64, f0_hz: f64, product: f64 },
    #[error("state diverged to non-finite values at step {step}")]
    NonFinite { step: u64 },
    #[error(
        "excitation timed out after {elapsed_s:.1} s: amplitude {amplitude_m:e} m \
         never reached the target {target_m:e} m"
    )]
    ExciteTimeout { elapsed_s: f64, amplitude_m: f64, target_m: f64 },
    #[error(
        "cold damping cannot converge: duration {duration_s:.1} s is under \
         10/(gamma+gamma_fb) = {needed_s:.1} s"
    )]
    NotConverged { duration_s: f64, needed_s: f64 },
    #[error("camera exposure {exposure_s} s exceeds the frame interval {frame_s} s")]
    ExposureExceedsFrame { exposure_s: f64, frame_s: f64 },
}

/// One simulation run: mode, bath, integration grid, and noise inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: OscillatorMode,
    /// Mode mass (kg).
    pub mass: f64,
    /// Bath temperature (K); 0 disables thermal forcing.
    pub temperature: f64,
    /// Integration step (s). Must satisfy dt * omega0 < 0.1.
    pub dt: f64,
    /// Simulated span (s).
    pub duration: f64,
    pub rng_seed: u64,
    /// Initial position (m).
    pub x0: f64,
    /// Initial velocity (m/s).
    pub v0: f64,
    /// Extra one-sided force PSD (N^2/Hz), e.g. residual vibration through
    /// the isolation chain.
    pub extra_force_psd: f64,
    /// White position noise added to what the feedback path measures (m).
    pub measurement_noise_std: f64,
    /// Record every n-th integrator sample. 1 records the full grid.
    pub sample_stride: usize,
}

impl SimConfig {
    /// Default integration step for a mode, 1/(200 f0).
    pub fn default_dt(f0_hz: f64) -> f64 {
        1.0 / (200.0 * f0_hz)
    }

    pub fn new(mode: OscillatorMode, mass: f64, temperature: f64, duration: f64) -> Self {
        Self {
            mode,
            mass,
            temperature,
            dt: Self::default_dt(mode.f0_hz),
            duration,
            rng_seed: 1,
            x0: 0.0,
            v0: 0.0,
            extra_force_psd: 0.0,
            measurement_noise_std: 0.0,
            sample_stride: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_initial(mut self, x0: f64, v0: f64) -> Self {
        self.x0 = x0;
        self.v0 = v0;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.mode.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if !(self.mass > 0.0) {
            return Err(SimError::InvalidConfig("mass must be positive".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(SimError::InvalidConfig("temperature must be non-negative".into()));
        }
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.duration >= self.dt) {
            return Err(SimError::InvalidConfig("duration must cover at least one step".into()));
        }
        if !(self.extra_force_psd >= 0.0) {
            return Err(SimError::InvalidConfig("extra_force_psd must be non-negative".into()));
        }
        if !(self.measurement_noise_std >= 0.0) {
            return Err(SimError::InvalidConfig(
                "measurement_noise_std must be non-negative".into(),
            ));
        }
        if self.sample_stride == 0 {
            return Err(SimError::InvalidConfig("sample_stride must be at least 1".into()));
        }
        let product = self.dt * self.mode.omega0();
        if product >= 0.1 {
            return Err(SimError::ResolutionGuard {
                dt: self.dt,
                f0_hz: self.mode.f0_hz,
                product,
            });
        }
        Ok(())
    }

    pub fn n_steps(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }

    /// Total one-sided force PSD driving the mode (N^2/Hz).
    pub fn total_force_psd(&self) -> f64 {
        4.0 * self.mass * self.mode.gamma * BOLTZMANN * self.temperature + self.extra_force_psd
    }

    /// Stable content hash identifying this configuration.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [
            self.mode.f0_hz,
            self.mode.gamma,
            self.mode.duffing_epsilon,
            self.mass,
            self.temperature,
            self.dt,
            self.duration,
            self.x0,
            self.v0,
            self.extra_force_psd,
            self.measurement_noise_std,
        ] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.rng_seed.to_le_bytes());
        h.update((self.sample_stride as u64).to_le_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    Off,
    /// Viscous cold damping: F = -gain * v_est, gain in N s/m.
    Cool,
    /// Fixed-amplitude resonant drive locked to the velocity phase,
    /// gain in N.
    Excite,
}

/// Feedback path: lock-in parameters and force synthesis.
///
/// The coil transduction is folded into `gain`, so gains are specified
/// directly in force units.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackConfig {
    pub mode: FeedbackMode,
    /// Demodulation carrier (Hz); normally the mode frequency.
    pub carrier_f_hz: f64,
    /// Lock-in corner (Hz); must sit well below the carrier.
    pub lockin_bandwidth_hz: f64,
    /// N s/m when cooling, N of drive amplitude when exciting.
    pub gain: f64,
    /// Added to the synthesized drive phase (rad).
    pub phase_offset: f64,
    /// Hard clamp on |F_fb| (N).
    pub coil_force_limit: f64,
}

impl FeedbackConfig {
    pub fn off() -> Self {
        Self {
            mode: FeedbackMode::Off,
            carrier_f_hz: 1.0,
            lockin_bandwidth_hz: 0.1,
            gain: 0.0,
            phase_offset: 0.0,
            coil_force_limit: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.mode == FeedbackMode::Off {
            return Ok(());
        }
        if !(self.carrier_f_hz > 0.0) {
            return Err(SimError::InvalidConfig("carrier_f_hz must be positive".into()));
        }
        if !(self.lockin_bandwidth_hz > 0.0)
            || self.lockin_bandwidth_hz >= 0.5 * self.carrier_f_hz
        {
            return Err(SimError::InvalidConfig(
                "lockin_bandwidth_hz must be positive and below half the carrier".into(),
            ));
        }
        if !(self.gain >= 0.0) {
            return Err(SimError::InvalidConfig("gain must be non-negative".into()));
        }
        if !(self.coil_force_limit > 0.0) {
            return Err(SimError::InvalidConfig("coil_force_limit must be positive".into()));
        }
        Ok(())
    }

    /// Effective viscous rate gamma_fb = gain/m the cooling mode targets.
    pub fn cooling_rate(&self, mass: f64) -> f64 {
        match self.mode {
            FeedbackMode::Cool => self.gain / mass,
            _ => 0.0,
        }
    }
}

/// Excite-then-release protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Target amplitude as a multiple of the thermal rms displacement.
    pub target_amplitude_factor: f64,
    /// Give up on excitation after this much simulated time (s).
    pub max_excite_duration: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { target_amplitude_factor: 10.0, max_excite_duration: 600.0 }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Drive phase, from t = 0 to the moment the target was reached.
    pub excite_phase: TimeSeries,
    /// Free decay, its own time base starting at 0.
    pub ringdown_phase: TimeSeries,
    /// Lock-in amplitude at switch-off (m).
    pub achieved_x0: f64,
    /// Thermal rms displacement the target was measured against (m).
    pub background_rms: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ColdDampResult {
    /// Mode temperature implied by the averaged position variance (K).
    pub t_eff: f64,
    /// Nominal total viscous rate gamma + gain/m (1/s).
    pub gamma_eff: f64,
    /// Position variance the temperature was derived from (m^2).
    pub mean_x2: f64,
}

struct Engine {
    w2: f64,
    eps: f64,
    dt: f64,
    half_dt: f64,
    inv_m: f64,
    gd2: f64,
    sigma_force: f64,
    meas_std: f64,
    omega_c: f64,
    mode: FeedbackMode,
    gain: f64,
    cos_po: f64,
    sin_po: f64,
    force_limit: f64,
    lockin: Option<Demodulator>,
    force_rng: ChaCha12Rng,
    meas_rng: ChaCha12Rng,
    x: f64,
    v: f64,
    step: u64,
}

impl Engine {
    fn new(config: &SimConfig, feedback: &FeedbackConfig) -> Result<Self, SimError> {
        config.validate()?;
        feedback.validate()?;
        let lockin = match feedback.mode {
            FeedbackMode::Off => None,
            _ => Some(
                Demodulator::new(
                    feedback.carrier_f_hz,
                    feedback.lockin_bandwidth_hz,
                    config.dt,
                    0.0,
                )
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?,
            ),
        };
        let mut force_rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
        force_rng.set_stream(0);
        let mut meas_rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
        meas_rng.set_stream(1);
        Ok(Self {
            w2: config.mode.omega0().powi(2),
            eps: config.mode.duffing_epsilon,
            dt: config.dt,
            half_dt: 0.5 * config.dt,
            inv_m: 1.0 / config.mass,
            gd2: 0.5 * config.mode.gamma * config.dt,
            sigma_force: (config.total_force_psd() / (2.0 * config.dt)).sqrt(),
            meas_std: config.measurement_noise_std,
            omega_c: std::f64::consts::TAU * feedback.carrier_f_hz,
            mode: feedback.mode,
            gain: feedback.gain,
            cos_po: feedback.phase_offset.cos(),
            sin_po: feedback.phase_offset.sin(),
            force_limit: feedback.coil_force_limit,
            lockin,
            force_rng,
            meas_rng,
            x: config.x0,
            v: config.v0,
            step: 0,
        })
    }

    fn feedback_force(&mut self) -> f64 {
        let Some(lockin) = self.lockin.as_mut() else { return 0.0 };
        let y = if self.meas_std > 0.0 {
            let n: f64 = StandardNormal.sample(&mut self.meas_rng);
            self.x + self.meas_std * n
        } else {
            self.x
        };
        let (i, q, c, s) = lockin.update(y);
        // Rotate the quadratures by the phase offset.
        let ir = i * self.cos_po - q * self.sin_po;
        let qr = q * self.cos_po + i * self.sin_po;
        let force = match self.mode {
            FeedbackMode::Off => 0.0,
            FeedbackMode::Cool => {
                // v_est(t) = -w_c (I sin + Q cos); F = -gain * v_est.
                self.gain * self.omega_c * (ir * s + qr * c)
            }
            FeedbackMode::Excite => {
                // Unit waveform along the velocity: -sin(theta + phi_est).
                let amp = ir.hypot(qr);
                if amp > 0.0 {
                    -self.gain * (s * ir + c * qr) / amp
                } else {
                    0.0
                }
            }
        };
        force.clamp(-self.force_limit, self.force_limit)
    }

    fn advance(&mut self) -> Result<(), SimError> {
        let f_fb = self.feedback_force();
        let noise: f64 = StandardNormal.sample(&mut self.force_rng);
        let accel_ext = (self.sigma_force * noise + f_fb) * self.inv_m;

        let a0 = -self.w2 * self.x - self.eps * self.x * self.x * self.x + accel_ext;
        let v_half = self.v * (1.0 - self.gd2) + self.half_dt * a0;
        let x1 = self.x + self.dt * v_half;
        let a1 = -self.w2 * x1 - self.eps * x1 * x1 * x1 + accel_ext;
        let v1 = (v_half + self.half_dt * a1) / (1.0 + self.gd2);
        if !(x1.is_finite() && v1.is_finite()) {
            return Err(SimError::NonFinite { step: self.step });
        }
        self.x = x1;
        self.v = v1;
        self.step += 1;
        Ok(())
    }

    fn lockin_amplitude(&self) -> f64 {
        self.lockin.as_ref().map_or(0.0, |l| l.amplitude())
    }
}

fn base_metadata(config: &SimConfig) -> std::collections::BTreeMap<String, String> {
    let mut m = std::collections::BTreeMap::new();
    m.insert("seed".into(), config.rng_seed.to_string());
    m.insert("config_digest".into(), config.digest());
    m.insert("gamma_2pi_hz".into(), fmt_sci(config.mode.gamma_over_2pi()));
    m.insert("f0_hz".into(), fmt_sci(config.mode.f0_hz));
    m
}

/// Integrate the mode for `config.duration` and return the true position
/// record (measurement models are applied separately by [`measure`]).
pub fn simulate(config: &SimConfig, feedback: &FeedbackConfig) -> Result<TimeSeries, SimError> {
    let mut engine = Engine::new(config, feedback)?;
    let n_steps = config.n_steps();
    let stride = config.sample_stride as u64;
    let mut samples = Vec::with_capacity((n_steps / stride + 2) as usize);
    samples.push(engine.x);
    for step in 1..=n_steps {
        engine.advance()?;
        if step % stride == 0 {
            samples.push(engine.x);
        }
    }
    let mut ts = TimeSeries::new(0.0, config.dt * stride as f64, samples);
    ts.metadata = base_metadata(config);
    Ok(ts)
}

/// Drive the mode at the carrier until the lock-in amplitude reaches
/// `target_amplitude_factor` times the thermal rms displacement, then release
/// and record the free decay for `config.duration`.
///
/// The target references the analytic equipartition level, so a given config
/// always chases the same amplitude.
pub fn run_protocol(
    config: &SimConfig,
    feedback: &FeedbackConfig,
    protocol: &ProtocolConfig,
) -> Result<ProtocolResult, SimError> {
    if feedback.mode != FeedbackMode::Excite {
        return Err(SimError::InvalidConfig(
            "run_protocol drives with feedback mode Excite".into(),
        ));
    }
    if !(protocol.target_amplitude_factor > 0.0) {
        return Err(SimError::InvalidConfig(
            "target_amplitude_factor must be positive".into(),
        ));
    }
    if !(protocol.max_excite_duration > 0.0) {
        return Err(SimError::InvalidConfig("max_excite_duration must be positive".into()));
    }
    let mut engine = Engine::new(config, feedback)?;
    let background_rms =
        equipartition_x2(config.mass, config.mode.f0_hz, config.temperature).sqrt();
    let target = protocol.target_amplitude_factor * background_rms;
    let stride = config.sample_stride as u64;
    let max_steps = (protocol.max_excite_duration / config.dt).round() as u64;

    let mut excite = vec![engine.x];
    let mut reached = false;
    let mut achieved = 0.0;
    for step in 1..=max_steps {
        engine.advance()?;
        if step % stride == 0 {
            excite.push(engine.x);
        }
        let amp = engine.lockin_amplitude();
        if amp >= target {
            reached = true;
            achieved = amp;
            break;
        }
    }
    if !reached {
        return Err(SimError::ExciteTimeout {
            elapsed_s: protocol.max_excite_duration,
            amplitude_m: engine.lockin_amplitude(),
            target_m: target,
        });
    }

    // Release: feedback off, same state and noise stream.
    engine.mode = FeedbackMode::Off;
    engine.lockin = None;
    let n_steps = config.n_steps();
    let mut ringdown = Vec::with_capacity((n_steps / stride + 2) as usize);
    ringdown.push(engine.x);
    for step in 1..=n_steps {
        engine.advance()?;
        if step % stride == 0 {
            ringdown.push(engine.x);
        }
    }

    let dt_out = config.dt * stride as f64;
    let mut excite_phase = TimeSeries::new(0.0, dt_out, excite);
    excite_phase.metadata = base_metadata(config);
    excite_phase.metadata.insert("phase".into(), "excite".into());
    let mut ringdown_phase = TimeSeries::new(0.0, dt_out, ringdown);
    ringdown_phase.metadata = base_metadata(config);
    ringdown_phase.metadata.insert("phase".into(), "ringdown".into());
    ringdown_phase.metadata.insert("achieved_x0".into(), fmt_sci(achieved));
    Ok(ProtocolResult { excite_phase, ringdown_phase, achieved_x0: achieved, background_rms })
}

/// Run cold damping to steady state and report the effective mode
/// temperature from the averaged position variance.
pub fn cold_damp(config: &SimConfig, feedback: &FeedbackConfig) -> Result<ColdDampResult, SimError> {
    if feedback.mode != FeedbackMode::Cool {
        return Err(SimError::InvalidConfig("cold_damp needs feedback mode Cool".into()));
    }
    let gamma_eff = config.mode.gamma + feedback.cooling_rate(config.mass);
    if !(gamma_eff > 0.0) {
        return Err(SimError::InvalidConfig(
            "cold damping needs gamma + gain/m > 0".into(),
        ));
    }
    let needed = 10.0 / gamma_eff;
    if config.duration < needed {
        return Err(SimError::NotConverged { duration_s: config.duration, needed_s: needed });
    }
    let ts = simulate(config, feedback)?;
    // First third is equilibration toward the damped steady state.
    let skip = ts.len() / 3;
    let tail = &ts.samples[skip..];
    let mean_x2 = tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64;
    let t_eff = config.mass * config.mode.omega0().powi(2) * mean_x2 / BOLTZMANN;
    Ok(ColdDampResult { t_eff, gamma_eff, mean_x2 })
}

/// Detector models applied to a true position record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureModel {
    /// White position noise followed by a hard clip at +-`clip`.
    Apd { noise_std: f64, clip: f64, rng_seed: u64 },
    /// Average over each exposure window, sampled at the frame rate.
    Camera { frame_rate_hz: f64, exposure: f64, noise_std: f64, rng_seed: u64 },
}

pub fn measure(ts: &TimeSeries, model: &MeasureModel) -> Result<TimeSeries, SimError> {
    match *model {
        MeasureModel::Apd { noise_std, clip, rng_seed } => {
            if !(noise_std >= 0.0) || !(clip > 0.0) {
                return Err(SimError::InvalidConfig(
                    "apd needs noise_std >= 0 and clip > 0".into(),
                ));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
            rng.set_stream(2);
            let samples = ts
                .samples
                .iter()
                .map(|&x| {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    (x + noise_std * n).clamp(-clip, clip)
                })
                .collect();
            let mut out = TimeSeries::new(ts.t0, ts.dt, samples);
            out.metadata = ts.metadata.clone();
            out.metadata.insert("detector".into(), "apd".into());
            Ok(out)
        }
        MeasureModel::Camera { frame_rate_hz, exposure, noise_std, rng_seed } => {
            if !(frame_rate_hz > 0.0) || !(exposure >= 0.0) || !(noise_std >= 0.0) {
                return Err(SimError::InvalidConfig(
                    "camera needs frame_rate_hz > 0, exposure >= 0, noise_std >= 0".into(),
                ));
            }
            let frame = 1.0 / frame_rate_hz;
            if exposure > frame * (1.0 + 1e-9) {
                return Err(SimError::ExposureExceedsFrame {
                    exposure_s: exposure,
                    frame_s: frame,
                });
            }
            let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
            rng.set_stream(3);
            // Samples averaged per frame; exposure 0 reads one sample.
            let per = ((exposure / ts.dt).round() as usize).max(1);
            let mut samples = Vec::new();
            let mut k = 0usize;
            loop {
                let start = (k as f64 * frame / ts.dt).round() as usize;
                if start + per > ts.len() {
                    break;
                }
                let mean =
                    ts.samples[start..start + per].iter().sum::<f64>() / per as f64;
                let n: f64 = if noise_std > 0.0 { StandardNormal.sample(&mut rng) } else { 0.0 };
                samples.push(mean + noise_std * n);
                k += 1;
            }
            if samples.is_empty() {
                return Err(SimError::InvalidConfig(
                    "record shorter than one camera frame".into(),
                ));
            }
            let mut out = TimeSeries::new(ts.t0, frame, samples);
            out.metadata = ts.metadata.clone();
            out.metadata.insert("detector".into(), "camera".into());
            Ok(out)
        }
    }
}
