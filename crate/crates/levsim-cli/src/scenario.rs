//! Scenario file: one JSON document that describes a run.
//!
//! Every physical quantity carries its unit in the field name
//! (`gamma_2pi_hz`, `gas_pressure_pa`), because unit mistakes are the
//! dominant failure mode in this domain. Unknown fields are rejected.
//!
//! A scenario is identified by a digest over its canonical JSON form
//! (keys sorted, defaults omitted), taken after command-line overrides
//! are applied, so the digest names the run that actually happened.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use levsim::isolation::IsolationStage;
use levsim::physics::{gas_damping, Environment, OscillatorMode, SpinMechanicsSetup, Sphere};
use levsim::presets;
use levsim::sim::{FeedbackConfig, FeedbackMode, ProtocolConfig, SimConfig};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<SphereCfg>,
    /// Mode mass (kg). Optional when `sphere` is given; then the sphere's
    /// mass is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolation: Option<IsolationCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<SpinCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereCfg {
    pub diameter_m: f64,
    pub density_kg_m3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCfg {
    pub f0_hz: f64,
    pub gamma_2pi_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duffing_epsilon_m2_s2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentCfg {
    pub temperature_k: f64,
    /// Residual gas pressure (Pa). When positive, the gas drag on the
    /// sphere is added to the mode's intrinsic damping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_pressure_pa: Option<f64>,
    /// Residual gas species; only "helium" is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimCfg {
    pub duration_s: f64,
    /// Integration step (s); defaults to 1/(200 f0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0_m_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_force_psd_n2_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_noise_std_m: Option<f64>,
    /// Record every n-th integrator sample; the integration grid is
    /// unaffected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_stride: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackCfg {
    /// "off", "cool", or "excite".
    pub mode: String,
    /// Lock-in carrier (Hz); defaults to the mode frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_f_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lockin_bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_offset_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coil_force_limit_n: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolCfg {
    /// Release amplitude as a multiple of the thermal rms displacement.
    pub target_amplitude_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_excite_duration_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lockin_bandwidth_hz: Option<f64>,
    /// Bin the raw squared displacement instead of a lock-in envelope.
    /// Robust to frequency pulling at the cost of full-band noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_free: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolationCfg {
    pub stages: Vec<StageCfg>,
    /// Frequency the budget is evaluated at (Hz); defaults to 8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_frequency_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageCfg {
    pub load_mass_kg: f64,
    pub char_frequency_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    /// Sweep axis; only "mass_kg" exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_min_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_max_kg: Option<f64>,
    /// "log" or "linear"; defaults to log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures_k: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_2pi_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_t_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_t_m: Option<f64>,
    /// "electron" or "proton"; overridden by `moment_j_t` if both appear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_j_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_t2_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_2pi_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
}

/// Sweep parameters with every default resolved.
pub struct SweepSpec {
    pub masses: Vec<f64>,
    pub temperatures: Vec<f64>,
    /// Fixed damping rate along the sweep (angular, 1/s).
    pub gamma: f64,
    /// Field gradient at the spin (T/m).
    pub gradient: f64,
}

/// Fit options with every default resolved.
pub struct FitOptions {
    pub bin_width: f64,
    pub lockin_bandwidth_hz: f64,
    pub carrier_free: bool,
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            cfg(format!("{} line {} column {}: {e}", path.display(), e.line(), e.column()))
        })
    }

    /// Fold command-line overrides into the scenario so the digest and the
    /// run agree on what was executed.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        scale_gamma: Option<f64>,
    ) -> Result<(), CliError> {
        if let Some(s) = seed {
            let sim = self
                .sim
                .as_mut()
                .ok_or_else(|| cfg("--seed given but the scenario has no sim block"))?;
            sim.rng_seed = Some(s);
        }
        if let Some(f) = scale_gamma {
            if !(f > 0.0 && f.is_finite()) {
                return Err(cfg("--scale-gamma must be a positive finite factor"));
            }
            let mode = self
                .mode
                .as_mut()
                .ok_or_else(|| cfg("--scale-gamma given but the scenario has no mode block"))?;
            mode.gamma_2pi_hz *= f;
        }
        Ok(())
    }

    /// 16 hex digits of SHA-256 over the canonical JSON form: keys sorted,
    /// absent fields omitted.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let canonical = serde_json::to_string(&value).expect("canonical form serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn mass(&self) -> Result<f64, CliError> {
        if let Some(m) = self.mass_kg {
            if !(m > 0.0) {
                return Err(cfg("mass_kg must be positive"));
            }
            return Ok(m);
        }
        if let Some(s) = &self.sphere {
            return Ok(self.build_sphere(s)?.mass());
        }
        Err(cfg("mass is undetermined: set mass_kg or a sphere block"))
    }

    fn build_sphere(&self, s: &SphereCfg) -> Result<Sphere, CliError> {
        Sphere::new(s.diameter_m, s.density_kg_m3).map_err(|e| cfg(format!("sphere: {e}")))
    }

    pub fn temperature(&self) -> Result<f64, CliError> {
        let env = self
            .environment
            .as_ref()
            .ok_or_else(|| cfg("missing environment block (environment.temperature_k)"))?;
        if !(env.temperature_k >= 0.0) {
            return Err(cfg("environment.temperature_k must be non-negative"));
        }
        Ok(env.temperature_k)
    }

    /// Damping the residual gas adds on top of the mode's intrinsic rate
    /// (angular, 1/s). Zero when no pressure is configured.
    pub fn gas_gamma(&self) -> Result<f64, CliError> {
        let Some(env) = &self.environment else { return Ok(0.0) };
        let pressure = env.gas_pressure_pa.unwrap_or(0.0);
        if pressure == 0.0 {
            return Ok(0.0);
        }
        match env.gas.as_deref() {
            None | Some("helium") => {}
            Some(other) => return Err(cfg(format!("unknown gas \"{other}\"; supported: helium"))),
        }
        let sphere_cfg = self
            .sphere
            .as_ref()
            .ok_or_else(|| cfg("environment.gas_pressure_pa needs a sphere block for the drag"))?;
        let sphere = self.build_sphere(sphere_cfg)?;
        let env = Environment::helium(env.temperature_k, pressure)
            .map_err(|e| cfg(format!("environment: {e}")))?;
        Ok(gas_damping(&sphere, &env))
    }

    /// The oscillator mode with gas drag folded into its damping rate.
    pub fn mode(&self) -> Result<OscillatorMode, CliError> {
        let m = self.mode.as_ref().ok_or_else(|| cfg("missing mode block (mode.f0_hz)"))?;
        let base = OscillatorMode::from_gamma_over_2pi(m.f0_hz, m.gamma_2pi_hz)
            .map_err(|e| cfg(format!("mode: {e}")))?;
        let total = OscillatorMode::new(m.f0_hz, base.gamma + self.gas_gamma()?)
            .map_err(|e| cfg(format!("mode: {e}")))?;
        Ok(total.with_duffing(m.duffing_epsilon_m2_s2.unwrap_or(0.0)))
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let sim = self
            .sim
            .as_ref()
            .ok_or_else(|| cfg("missing sim block (sim.duration_s)"))?;
        let mode = self.mode()?;
        let mut config = SimConfig::new(mode, self.mass()?, self.temperature()?, sim.duration_s)
            .with_seed(sim.rng_seed.unwrap_or(1))
            .with_initial(sim.x0_m.unwrap_or(0.0), sim.v0_m_s.unwrap_or(0.0))
            .with_stride(sim.sample_stride.unwrap_or(1));
        if let Some(dt) = sim.dt_s {
            config = config.with_dt(dt);
        }
        config.extra_force_psd = sim.extra_force_psd_n2_hz.unwrap_or(0.0);
        config.measurement_noise_std = sim.measurement_noise_std_m.unwrap_or(0.0);
        config.validate().map_err(|e| cfg(format!("sim: {e}")))?;
        Ok(config)
    }

    pub fn feedback_config(&self, f0_hz: f64) -> Result<FeedbackConfig, CliError> {
        let Some(fb) = &self.feedback else { return Ok(FeedbackConfig::off()) };
        let mode = match fb.mode.as_str() {
            "off" => return Ok(FeedbackConfig::off()),
            "cool" => FeedbackMode::Cool,
            "excite" => FeedbackMode::Excite,
            other => {
                return Err(cfg(format!(
                    "feedback.mode \"{other}\" is not one of off, cool, excite"
                )))
            }
        };
        let config = FeedbackConfig {
            mode,
            carrier_f_hz: fb.carrier_f_hz.unwrap_or(f0_hz),
            lockin_bandwidth_hz: fb
                .lockin_bandwidth_hz
                .ok_or_else(|| cfg("missing feedback.lockin_bandwidth_hz"))?,
            gain: fb.gain_n.ok_or_else(|| cfg("missing feedback.gain_n"))?,
            phase_offset: fb.phase_offset_rad.unwrap_or(0.0),
            coil_force_limit: fb.coil_force_limit_n.unwrap_or(1.0e-12),
        };
        config.validate().map_err(|e| cfg(format!("feedback: {e}")))?;
        Ok(config)
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig, CliError> {
        let p = self
            .protocol
            .as_ref()
            .ok_or_else(|| cfg("missing protocol block (protocol.target_amplitude_factor)"))?;
        Ok(ProtocolConfig {
            target_amplitude_factor: p.target_amplitude_factor,
            max_excite_duration: p.max_excite_duration_s.unwrap_or(600.0),
        })
    }

    pub fn fit_options(&self) -> FitOptions {
        let f = self.fit.as_ref();
        FitOptions {
            bin_width: f.and_then(|f| f.bin_width_s).unwrap_or(20.0),
            lockin_bandwidth_hz: f.and_then(|f| f.lockin_bandwidth_hz).unwrap_or(0.1),
            carrier_free: f.and_then(|f| f.carrier_free).unwrap_or(false),
        }
    }

    /// Isolation stages plus the evaluation frequency; the reference
    /// three-stage chain at 8 Hz when the scenario does not configure one.
    pub fn isolation_setup(&self) -> Result<(Vec<IsolationStage>, f64), CliError> {
        let Some(iso) = &self.isolation else {
            return Ok((presets::isolation_stages(), 8.0));
        };
        if iso.stages.is_empty() {
            return Err(cfg("isolation.stages is empty"));
        }
        let stages = iso
            .stages
            .iter()
            .map(|s| IsolationStage {
                load_mass: s.load_mass_kg,
                char_frequency_hz: s.char_frequency_hz,
                quality: s.quality,
            })
            .collect();
        Ok((stages, iso.at_frequency_hz.unwrap_or(8.0)))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let sw = self.sweep.clone().unwrap_or(SweepCfg {
            axis: None,
            mass_min_kg: None,
            mass_max_kg: None,
            scale: None,
            points: None,
            temperatures_k: None,
            gamma_2pi_hz: None,
            gradient_t_m: None,
        });
        match sw.axis.as_deref() {
            None | Some("mass_kg") => {}
            Some(other) => return Err(cfg(format!("sweep.axis \"{other}\"; only mass_kg exists"))),
        }
        let min = sw.mass_min_kg.unwrap_or(1.0e-19);
        let max = sw.mass_max_kg.unwrap_or(1.0e-9);
        let points = sw.points.unwrap_or(51);
        if !(min > 0.0 && max > min) {
            return Err(cfg("sweep mass range is empty: need 0 < mass_min_kg < mass_max_kg"));
        }
        if points < 2 {
            return Err(cfg("sweep.points must be at least 2"));
        }
        let log = match sw.scale.as_deref() {
            None | Some("log") => true,
            Some("linear") => false,
            Some(other) => {
                return Err(cfg(format!("sweep.scale \"{other}\"; use log or linear")))
            }
        };
        let mut masses = Vec::with_capacity(points);
        for i in 0..points {
            let frac = i as f64 / (points - 1) as f64;
            let m = if i == 0 {
                min
            } else if i == points - 1 {
                max
            } else if log {
                min * (max / min).powf(frac)
            } else {
                min + (max - min) * frac
            };
            masses.push(m);
        }
        let temperatures = sw.temperatures_k.unwrap_or_else(|| vec![3.0, 0.01]);
        if temperatures.is_empty() || temperatures.iter().any(|t| !(*t > 0.0)) {
            return Err(cfg("sweep.temperatures_k must be a non-empty list of positive values"));
        }
        let gamma_2pi = sw.gamma_2pi_hz.unwrap_or(0.59e-6);
        if !(gamma_2pi > 0.0) {
            return Err(cfg("sweep.gamma_2pi_hz must be positive"));
        }
        let gradient = sw.gradient_t_m.unwrap_or(1.0e4);
        if !(gradient > 0.0) {
            return Err(cfg("sweep.gradient_t_m must be positive"));
        }
        Ok(SweepSpec {
            masses,
            temperatures,
            gamma: 2.0 * std::f64::consts::PI * gamma_2pi,
            gradient,
        })
    }

    pub fn spin_setup(&self) -> Result<SpinMechanicsSetup, CliError> {
        let default = presets::spin_default();
        let Some(sp) = &self.spin else { return Ok(default) };
        let moment = match (sp.moment_j_t, sp.moment.as_deref()) {
            (Some(m), _) => m,
            (None, None | Some("electron")) => levsim::constants::BOHR_MAGNETON,
            (None, Some("proton")) => levsim::constants::PROTON_MOMENT,
            (None, Some(other)) => {
                return Err(cfg(format!(
                    "spin.moment \"{other}\"; use electron, proton, or moment_j_t"
                )))
            }
        };
        let mode = match (sp.f0_hz, sp.gamma_2pi_hz) {
            (Some(f0), Some(g)) => OscillatorMode::from_gamma_over_2pi(f0, g)
                .map_err(|e| cfg(format!("spin mode: {e}")))?,
            (None, None) => default.mode,
            _ => return Err(cfg("spin.f0_hz and spin.gamma_2pi_hz must be set together")),
        };
        let setup = SpinMechanicsSetup {
            gradient: sp.gradient_t_m.unwrap_or(default.gradient),
            spin_moment: moment,
            spin_t2: sp.spin_t2_s.unwrap_or(default.spin_t2),
            mode,
            mass: sp.mass_kg.unwrap_or(default.mass),
            temperature: sp.temperature_k.unwrap_or(default.temperature),
        };
        setup.validate().map_err(|e| cfg(format!("spin: {e}")))?;
        Ok(setup)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Scenario {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn digest_ignores_key_order_in_the_file() {
        let a = parse(r#"{"mass_kg": 1e-12, "mode": {"f0_hz": 11.7, "gamma_2pi_hz": 1e-4}}"#);
        let b = parse(r#"{"mode": {"gamma_2pi_hz": 1e-4, "f0_hz": 11.7}, "mass_kg": 1e-12}"#);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn digest_tracks_overrides() {
        let mut a = parse(
            r#"{"mode": {"f0_hz": 11.7, "gamma_2pi_hz": 1e-4},
                "sim": {"duration_s": 10.0, "rng_seed": 1}}"#,
        );
        let before = a.digest();
        a.apply_overrides(Some(2), Some(10.0)).unwrap();
        assert_ne!(a.digest(), before);
        assert_eq!(a.sim.as_ref().unwrap().rng_seed, Some(2));
        assert_eq!(a.mode.as_ref().unwrap().gamma_2pi_hz, 1e-3);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<Scenario>(r#"{"pressure": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("pressure"));
    }

    #[test]
    fn missing_mass_is_named() {
        let sc = parse(r#"{"mode": {"f0_hz": 11.7, "gamma_2pi_hz": 1e-4}}"#);
        let err = sc.mass().unwrap_err();
        assert!(err.to_string().contains("mass_kg"), "{err}");
    }

    #[test]
    fn sphere_supplies_the_mass() {
        let sc = parse(r#"{"sphere": {"diameter_m": 9.8e-6, "density_kg_m3": 1100.0}}"#);
        let mass = sc.mass().unwrap();
        assert!((mass - 5.420877e-13).abs() / 5.420877e-13 < 1e-4, "{mass}");
    }

    #[test]
    fn gas_pressure_adds_damping() {
        let sc = parse(
            r#"{"sphere": {"diameter_m": 9.8e-6, "density_kg_m3": 1100.0},
                "mode": {"f0_hz": 11.7, "gamma_2pi_hz": 0.59e-6},
                "environment": {"temperature_k": 3.0, "gas_pressure_pa": 2.0e-4}}"#,
        );
        let mode = sc.mode().unwrap();
        let intrinsic = 2.0 * std::f64::consts::PI * 0.59e-6;
        assert!((mode.gamma - intrinsic - 1.50015e-3).abs() < 1e-7, "{}", mode.gamma);
    }

    #[test]
    fn sweep_grid_hits_both_endpoints_exactly() {
        let sc = parse(r#"{"sweep": {"mass_min_kg": 1e-19, "mass_max_kg": 1e-9, "points": 51}}"#);
        let spec = sc.sweep_spec().unwrap();
        assert_eq!(spec.masses.len(), 51);
        assert_eq!(spec.masses[0], 1e-19);
        assert_eq!(spec.masses[50], 1e-9);
        assert!(spec.masses.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_sweep_range_is_a_config_error() {
        let sc = parse(r#"{"sweep": {"mass_min_kg": 1e-9, "mass_max_kg": 1e-9}}"#);
        assert!(matches!(sc.sweep_spec(), Err(CliError::Config(_))));
    }
}
