//! Physics checks on the stochastic trajectories: thermal statistics,
//! spectral consistency, nonlinear frequency pull, and feedback behavior.
//!
//! Damping rates here are orders of magnitude above the instrument's
//! operating point so runs fit in a test budget; every quantity under test
//! is damping-independent or expressed relative to the configured rate.

use levsim::constants::BOLTZMANN;
use levsim::lockin::lockin_demodulate;
use levsim::physics::{equipartition_x2, OscillatorMode};
use levsim::sim::{cold_damp, simulate, FeedbackConfig, FeedbackMode, SimConfig};
use levsim::spectral::welch_psd;
use rayon::prelude::*;
use std::f64::consts::TAU;

const MASS: f64 = 5.420877e-13;

fn fast_mode(gamma: f64) -> OscillatorMode {
    OscillatorMode::new(11.7, gamma).unwrap()
}

#[test]
fn thermal_motion_satisfies_equipartition() {
    // 12 seeds x 1500 s at gamma = 0.2/s give a 2.4% standard error on the
    // pooled variance; the tolerance leaves over 2 sigma of headroom.
    let mode = fast_mode(0.2);
    let temperature = 3.0;
    let expected = equipartition_x2(MASS, mode.f0_hz, temperature);
    let mean_x2: Vec<f64> = (0..12u64)
        .into_par_iter()
        .map(|seed| {
            let config = SimConfig::new(mode, MASS, temperature, 1500.0)
                .with_seed(100 + seed)
                .with_stride(8);
            let ts = simulate(&config, &FeedbackConfig::off()).unwrap();
            // Skip 10 relaxation times of transient from the x = 0 start.
            let skip = (50.0 / ts.dt) as usize;
            let tail = &ts.samples[skip..];
            tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64
        })
        .collect();
    let pooled = mean_x2.iter().sum::<f64>() / mean_x2.len() as f64;
    let rel = (pooled - expected) / expected;
    assert!(
        rel.abs() < 0.06,
        "pooled <x^2> {pooled:e} vs equipartition {expected:e} ({:+.1}%)",
        100.0 * rel
    );
}

#[test]
fn spectrum_integrates_to_variance_and_peaks_at_resonance() {
    let mode = fast_mode(0.5);
    let temperature = 3.0;
    let config = SimConfig::new(mode, MASS, temperature, 1200.0).with_seed(7);
    let ts = simulate(&config, &FeedbackConfig::off()).unwrap();
    let skip = (20.0 / ts.dt) as usize;
    let tail = &ts.samples[skip..];
    let var = tail.iter().map(|x| x * x).sum::<f64>() / tail.len() as f64;

    let psd = welch_psd(tail, ts.fs(), 16).unwrap();
    let total = psd.total_power();
    assert!(
        (total - var).abs() / var < 0.05,
        "PSD integral {total:e} vs variance {var:e}"
    );

    let peak_f = psd
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| psd.freqs_hz[k])
        .unwrap();
    assert!(
        (peak_f - mode.f0_hz).abs() < 0.1,
        "spectral peak at {peak_f} Hz, expected {}",
        mode.f0_hz
    );

    // On-resonance displacement PSD of a driven damped mode:
    // S_xx(f0) = 4 k_B T / (m gamma omega0^2).
    let analytic_peak = 4.0 * BOLTZMANN * temperature / (MASS * mode.gamma * mode.omega0().powi(2));
    let measured_peak = psd
        .freqs_hz
        .iter()
        .zip(&psd.values)
        .filter(|(f, _)| (**f - mode.f0_hz).abs() < 0.05)
        .map(|(_, v)| *v)
        .fold(f64::MIN, f64::max);
    let rel = (measured_peak - analytic_peak) / analytic_peak;
    assert!(
        rel.abs() < 0.35,
        "peak PSD {measured_peak:e} vs analytic {analytic_peak:e} ({:+.0}%)",
        100.0 * rel
    );
}

#[test]
fn duffing_pull_matches_backbone_slope() {
    // Noiseless, nearly undamped runs at three amplitudes: the oscillation
    // frequency shifts up by 3 eps X^2 / (8 omega0), measured from the
    // lock-in phase ramp against a carrier pinned at the linear resonance.
    let eps = 1.0e9;
    let mode = OscillatorMode::new(11.7, 1.0e-5).unwrap().with_duffing(eps);
    let omega0 = mode.omega0();
    let dt = 1.0 / (500.0 * mode.f0_hz);
    let mut measured = Vec::new();
    let amplitudes = [1.0e-4, 1.5e-4, 2.0e-4];
    for &a in &amplitudes {
        let config = SimConfig::new(mode, MASS, 0.0, 120.0).with_initial(a, 0.0).with_dt(dt);
        let ts = simulate(&config, &FeedbackConfig::off()).unwrap();
        let quads = lockin_demodulate(&ts, mode.f0_hz, 0.5).unwrap();
        let phase = quads.unwrapped_phase();
        let settle = quads.settle_samples();
        // Linear fit of phase vs time over the settled stretch.
        let t: Vec<f64> = (settle..phase.len()).map(|k| k as f64 * ts.dt).collect();
        let p = &phase[settle..];
        let n = p.len() as f64;
        let tm = t.iter().sum::<f64>() / n;
        let pm = p.iter().sum::<f64>() / n;
        let sxx: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
        let sxy: f64 = t.iter().zip(p).map(|(v, w)| (v - tm) * (w - pm)).sum();
        // Rising phase of I + iQ means the motion runs above the carrier.
        measured.push(sxy / sxx);
    }
    for (k, &a) in amplitudes.iter().enumerate() {
        let predicted = 3.0 * eps * a * a / (8.0 * omega0);
        let rel = (measured[k] - predicted) / predicted;
        assert!(
            rel.abs() < 0.10,
            "amplitude {a:e}: pull {:.4e} vs predicted {predicted:.4e} ({:+.1}%)",
            measured[k],
            100.0 * rel
        );
    }
    // The pull grows as X^2: quadrupling the squared amplitude between the
    // end points quadruples the shift.
    let ratio = measured[2] / measured[0];
    assert!((ratio - 4.0).abs() < 0.4, "backbone ratio {ratio}");
}

#[test]
fn excitation_amplitude_grows_with_gain() {
    let mode = fast_mode(3.707e-3);
    let temperature = 3.0;
    let gains = [5.0e-19, 1.0e-18];
    let finals: Vec<(f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let run = |gain: f64| {
                let config = SimConfig::new(mode, MASS, temperature, 200.0).with_seed(900 + seed);
                let feedback = FeedbackConfig {
                    mode: FeedbackMode::Excite,
                    carrier_f_hz: mode.f0_hz,
                    lockin_bandwidth_hz: 0.1,
                    gain,
                    phase_offset: 0.0,
                    coil_force_limit: 1.0e-12,
                };
                let ts = simulate(&config, &feedback).unwrap();
                let quads = lockin_demodulate(&ts, mode.f0_hz, 0.1).unwrap();
                let k = quads.i.len() - 1;
                quads.i[k].hypot(quads.q[k])
            };
            (run(gains[0]), run(gains[1]))
        })
        .collect();
    let mut wins = 0;
    for (lo, hi) in &finals {
        assert!(*lo > 0.0 && *hi > 0.0);
        if hi > lo {
            wins += 1;
        }
    }
    // Same seed, same bath realization: the stronger drive should win
    // essentially always.
    assert!(wins >= 9, "higher gain won only {wins}/10 paired runs");
    let rms = equipartition_x2(MASS, mode.f0_hz, temperature).sqrt();
    let mean_hi = finals.iter().map(|(_, h)| h).sum::<f64>() / finals.len() as f64;
    assert!(mean_hi > 3.0 * rms, "drive never rose above thermal ({mean_hi:e} vs {rms:e})");
}

#[test]
fn cold_damping_cools_toward_gain_ratio() {
    let mode = fast_mode(3.707e-3);
    let temperature = 3.0;
    let gamma_fb = 9.0 * mode.gamma;
    let feedback = FeedbackConfig {
        mode: FeedbackMode::Cool,
        carrier_f_hz: mode.f0_hz,
        lockin_bandwidth_hz: 0.5,
        gain: MASS * gamma_fb,
        phase_offset: 0.0,
        coil_force_limit: 1.0e-12,
    };
    let config = SimConfig::new(mode, MASS, temperature, 4000.0).with_seed(31).with_stride(4);
    let result = cold_damp(&config, &feedback).unwrap();
    let target = temperature * mode.gamma / (mode.gamma + gamma_fb);
    assert!(
        result.t_eff > 0.5 * target && result.t_eff < 2.0 * target,
        "T_eff {} vs target {target}",
        result.t_eff
    );
    assert!((result.gamma_eff - 10.0 * mode.gamma).abs() < 1e-12);
}

#[test]
fn measurement_noise_sets_a_cooling_floor() {
    // With noisy position readout, cranking the gain reinjects noise:
    // the apparent temperature with noise ends up far above the noiseless
    // run at the same strong gain.
    let mode = fast_mode(3.707e-3);
    let temperature = 3.0;
    let gamma_fb = 30.0 * mode.gamma;
    // Feedback converts position noise of PSD S_nn into force noise of
    // PSD (gain w0)^2 S_nn; size the readout noise so that injection is
    // 10x the thermal force PSD, i.e. well past the useful gain.
    let s_ff = 4.0 * MASS * mode.gamma * BOLTZMANN * temperature;
    let gain = MASS * gamma_fb;
    let s_nn = 10.0 * s_ff / (gain * mode.omega0()).powi(2);
    let dt = SimConfig::default_dt(mode.f0_hz);
    let noise_std = (s_nn / (2.0 * dt)).sqrt();
    let run = |noise: f64, seed: u64| {
        let mut config =
            SimConfig::new(mode, MASS, temperature, 3000.0).with_seed(seed).with_stride(4);
        config.measurement_noise_std = noise;
        let feedback = FeedbackConfig {
            mode: FeedbackMode::Cool,
            carrier_f_hz: mode.f0_hz,
            lockin_bandwidth_hz: 0.5,
            gain: MASS * gamma_fb,
            phase_offset: 0.0,
            coil_force_limit: 1.0e-12,
        };
        cold_damp(&config, &feedback).unwrap().t_eff
    };
    let (clean, noisy) = rayon::join(|| run(0.0, 77), || run(noise_std, 77));
    assert!(
        noisy > 3.0 * clean,
        "noise injection should heat the mode: clean {clean} K vs noisy {noisy} K"
    );
}

#[test]
fn trajectories_are_reproducible_and_seed_sensitive() {
    let mode = fast_mode(0.1);
    let config = SimConfig::new(mode, MASS, 3.0, 60.0).with_seed(5);
    let feedback = FeedbackConfig {
        mode: FeedbackMode::Cool,
        carrier_f_hz: mode.f0_hz,
        lockin_bandwidth_hz: 0.5,
        gain: 1.0e-15,
        phase_offset: 0.0,
        coil_force_limit: 1.0e-12,
    };
    let a = simulate(&config, &feedback).unwrap();
    let b = simulate(&config, &feedback).unwrap();
    assert_eq!(a.digest(), b.digest(), "same seed must be bit identical");
    let c = simulate(&config.clone().with_seed(6), &feedback).unwrap();
    assert_ne!(a.digest(), c.digest(), "different seed must differ");
    // The decorrelated trajectories still share thermal statistics.
    let var = |ts: &levsim::series::TimeSeries| {
        ts.samples.iter().map(|x| x * x).sum::<f64>() / ts.len() as f64
    };
    let (va, vc) = (var(&a), var(&c));
    assert!(va / vc < 5.0 && vc / va < 5.0);
}

#[test]
fn duffing_term_off_matches_linear_run() {
    // eps = 0 and the default linear mode integrate identically.
    let linear = OscillatorMode::new(11.7, 0.05).unwrap();
    let explicit = linear.with_duffing(0.0);
    let c1 = SimConfig::new(linear, MASS, 3.0, 30.0).with_seed(2);
    let c2 = SimConfig::new(explicit, MASS, 3.0, 30.0).with_seed(2);
    let a = simulate(&c1, &FeedbackConfig::off()).unwrap();
    let b = simulate(&c2, &FeedbackConfig::off()).unwrap();
    assert_eq!(a.digest(), b.digest());
}
