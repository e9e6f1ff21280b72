//! Property tests for the closed-form physics, the isolation budget, and
//! the serialization layer.

use levsim::isolation::{chain_isolation_db, stage_isolation_db, IsolationStage};
use levsim::lockin::lockin_demodulate;
use levsim::physics::{
    accel_noise_density, equipartition_x2, force_noise_density, gas_damping, Environment,
    OscillatorMode, Sphere,
};
use levsim::series::TimeSeries;
use proptest::prelude::*;

fn sphere_strategy() -> impl Strategy<Value = Sphere> {
    (1.0e-7..1.0e-4f64, 500.0..6000.0f64)
        .prop_map(|(d, rho)| Sphere::new(d, rho).unwrap())
}

fn env_strategy() -> impl Strategy<Value = Environment> {
    (0.1..300.0f64, 1.0e-9..1.0e-2f64).prop_map(|(t, p)| Environment::helium(t, p).unwrap())
}

proptest! {
    #[test]
    fn gas_damping_scales_with_pressure_and_against_size(
        sphere in sphere_strategy(),
        env in env_strategy(),
        factor in 1.1..10.0f64,
    ) {
        let base = gas_damping(&sphere, &env);
        prop_assert!(base > 0.0);

        let higher_p = Environment::helium(env.temperature, env.gas_pressure * factor).unwrap();
        let g_p = gas_damping(&sphere, &higher_p);
        prop_assert!((g_p / base - factor).abs() < 1e-9 * factor);

        let bigger = Sphere::new(sphere.diameter * factor, sphere.density).unwrap();
        prop_assert!(gas_damping(&bigger, &env) < base);

        let denser = Sphere::new(sphere.diameter, sphere.density * factor).unwrap();
        prop_assert!(gas_damping(&denser, &env) < base);

        // Hotter gas moves faster and couples less per unit pressure.
        let hotter = Environment::helium(env.temperature * factor, env.gas_pressure).unwrap();
        prop_assert!(gas_damping(&sphere, &hotter) < base);
    }

    #[test]
    fn force_noise_scales_as_sqrt_of_mass_damping_temperature(
        mass in 1.0e-15..1.0e-9f64,
        gamma in 1.0e-7..1.0f64,
        temperature in 0.01..300.0f64,
    ) {
        let n = force_noise_density(mass, gamma, temperature);
        prop_assert!((n.asd * n.asd - n.psd).abs() <= 1e-12 * n.psd);
        let n4 = force_noise_density(4.0 * mass, gamma, temperature);
        prop_assert!((n4.asd / n.asd - 2.0).abs() < 1e-9);
        let n4g = force_noise_density(mass, 4.0 * gamma, temperature);
        prop_assert!((n4g.asd / n.asd - 2.0).abs() < 1e-9);
        let n4t = force_noise_density(mass, gamma, 4.0 * temperature);
        prop_assert!((n4t.asd / n.asd - 2.0).abs() < 1e-9);
    }

    #[test]
    fn accel_noise_drops_with_mass(
        mass in 1.0e-15..1.0e-9f64,
        gamma in 1.0e-7..1.0f64,
        temperature in 0.01..300.0f64,
    ) {
        // Force noise grows with sqrt(m), so acceleration noise falls as
        // 1/sqrt(m): heavier probes sense smaller accelerations.
        let a = accel_noise_density(mass, gamma, temperature);
        let a4 = accel_noise_density(4.0 * mass, gamma, temperature);
        prop_assert!((a.asd / a4.asd - 2.0).abs() < 1e-9);
        // g-referenced and SI ASDs differ by exactly standard gravity.
        prop_assert!((a.asd / a.asd_g - 9.8).abs() < 1e-9 * 9.8);
    }

    #[test]
    fn quality_factor_times_linewidth_is_the_frequency(
        f0 in 0.1..1000.0f64,
        gamma_2pi in 1.0e-9..0.01f64,
    ) {
        let mode = OscillatorMode::from_gamma_over_2pi(f0, gamma_2pi).unwrap();
        let q = mode.quality_factor().unwrap();
        prop_assert!((q * mode.gamma_over_2pi() - f0).abs() < 1e-9 * f0);
    }

    #[test]
    fn equipartition_variance_scaling(
        mass in 1.0e-15..1.0e-9f64,
        f0 in 0.1..1000.0f64,
        temperature in 0.01..300.0f64,
    ) {
        let x2 = equipartition_x2(mass, f0, temperature);
        prop_assert!(x2 > 0.0);
        // Twice the temperature doubles the variance; twice the frequency
        // quarters it.
        let hot = equipartition_x2(mass, f0, 2.0 * temperature);
        prop_assert!((hot / x2 - 2.0).abs() < 1e-9);
        let stiff = equipartition_x2(mass, 2.0 * f0, temperature);
        prop_assert!((stiff * 4.0 / x2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn isolation_chain_adds_stage_by_stage(
        f in 8.0..200.0f64,
        f1 in 0.5..1.9f64,
        f2 in 0.5..1.9f64,
        f3 in 0.5..1.9f64,
    ) {
        let stages = vec![
            IsolationStage::undamped(2.9, f1),
            IsolationStage::undamped(0.4, f2),
            IsolationStage::undamped(0.04, f3),
        ];
        let total = chain_isolation_db(&stages, f).unwrap();
        let sum: f64 = stages
            .iter()
            .map(|s| stage_isolation_db(s, f).unwrap())
            .sum();
        prop_assert!((total - sum).abs() < 1e-9);
        // Well above every corner the attenuation only improves with
        // frequency.
        let total_hi = chain_isolation_db(&stages, f * 1.5).unwrap();
        prop_assert!(total_hi > total);
    }

    #[test]
    fn csv_serialization_is_stable_after_one_round_trip(
        t0 in -1.0e3..1.0e3f64,
        dt in 1.0e-6..1.0f64,
        samples in prop::collection::vec(-1.0e-3..1.0e-3f64, 1..200),
    ) {
        let mut ts = TimeSeries::new(t0, dt, samples);
        ts.metadata.insert("seed".into(), "7".into());
        let first = ts.to_csv_string();
        let back = TimeSeries::read_csv(first.as_bytes()).unwrap();
        let second = back.to_csv_string();
        prop_assert_eq!(first, second);
        prop_assert_eq!(back.len(), ts.len());
    }

    #[test]
    fn lockin_recovers_tone_amplitude_and_phase(
        amp in 1.0e-9..1.0e-3f64,
        phase in -3.0..3.0f64,
        f0 in 2.0..20.0f64,
    ) {
        let bw = 0.2 * f0;
        let dt = 1.0 / (50.0 * f0);
        let duration = 30.0 / bw;
        let n = (duration / dt) as usize;
        let samples: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                amp * (std::f64::consts::TAU * f0 * t + phase).cos()
            })
            .collect();
        let ts = TimeSeries::new(0.0, dt, samples);
        let quads = lockin_demodulate(&ts, f0, bw).unwrap();
        let k = quads.i.len() - 1;
        let x = quads.i[k].hypot(quads.q[k]);
        prop_assert!((x - amp).abs() < 0.03 * amp, "amp {} got {}", amp, x);
        let got = quads.q[k].atan2(quads.i[k]);
        let dphi = (got - phase).rem_euclid(std::f64::consts::TAU);
        let dphi = dphi.min(std::f64::consts::TAU - dphi);
        prop_assert!(dphi < 0.05, "phase {} got {}", phase, got);
    }
}
