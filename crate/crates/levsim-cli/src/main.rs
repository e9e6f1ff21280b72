//! Command line front end for the levsim toolkit.
//!
//! Subcommands wrap the library one to one: `simulate` and `protocol` run
//! the stochastic engine, `fit` estimates a damping rate from a recorded
//! trace, and `sensitivity`, `isolation`, `spin` evaluate the closed-form
//! instrument models. All artifacts are byte-stable: rerunning a command
//! with the same scenario and seed reproduces every output file exactly,
//! and wall-clock timing goes to stderr only.

use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use levsim::constants::{BOHR_MAGNETON, PROTON_MOMENT};
use levsim::estimate::{envelope, envelope_binned, fit_decay_thermal};
use levsim::isolation::{chain_isolation_db, stage_isolation_db};
use levsim::physics::{
    accel_noise_density, coherence_criterion, cooperativity, detectable_mass_threshold,
    equipartition_x2, force_noise_density, spin_coupling, spin_force, thermal_decoherence,
    zero_point_motion,
};
use levsim::series::{fmt_sci, TimeSeries};
use levsim::sim::{cold_damp, run_protocol, simulate, FeedbackMode};

use levsim_cli::report::{write_kv, write_table, Provenance, VERSION};
use levsim_cli::scenario::Scenario;
use levsim_cli::CliError;

#[derive(Parser)]
#[command(
    name = "levsim",
    version,
    about = "Simulation and estimation toolkit for ultra-high-Q levitated oscillators"
)]
struct Cli {
    /// Scenario file (JSON, unit-suffixed field names).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override sim.rng_seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Multiply the mode damping rate, e.g. 1000 to compress a ring-down.
    #[arg(long = "scale-gamma", global = true, value_name = "FACTOR")]
    scale_gamma: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one record with the configured feedback and write trace.csv.
    Simulate,
    /// Excite to the target amplitude, release, and record the ring-down.
    Protocol,
    /// Fit a damping rate to a recorded trace (or echo Q for given numbers).
    Fit {
        /// Trace CSV produced by simulate or protocol.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Carrier / mode frequency (Hz); defaults to mode.f0_hz.
        #[arg(long = "f0-hz", value_name = "HZ")]
        f0_hz: Option<f64>,
        /// Skip fitting and report Q = f0/(gamma/2pi) for this rate.
        #[arg(long = "gamma-2pi-hz", value_name = "HZ")]
        gamma_2pi_hz: Option<f64>,
    },
    /// Thermal force and acceleration noise across a mass sweep.
    Sensitivity,
    /// Vibration isolation budget of the stage chain.
    Isolation,
    /// Spin-mechanics coupling figures for the configured setup.
    Spin,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Protocol => cmd_protocol(cli),
        Command::Fit { input, f0_hz, gamma_2pi_hz } => {
            cmd_fit(cli, input.as_deref(), *f0_hz, *gamma_2pi_hz)
        }
        Command::Sensitivity => cmd_sensitivity(cli),
        Command::Isolation => cmd_isolation(cli),
        Command::Spin => cmd_spin(cli),
    }
}

/// Load the scenario (an empty one when the command has defaults and no
/// --config was given) and fold in the command-line overrides.
fn load_scenario(cli: &Cli, required: bool) -> Result<Scenario, CliError> {
    let mut sc = match &cli.config {
        Some(path) => Scenario::load(path)?,
        None if required => {
            return Err(CliError::Config("this command needs --config <scenario.json>".into()))
        }
        None => Scenario::default(),
    };
    sc.apply_overrides(cli.seed, cli.scale_gamma)?;
    Ok(sc)
}

fn out_dir(cli: &Cli) -> Result<&Path, CliError> {
    fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    Ok(&cli.out)
}

fn stamp(ts: &mut TimeSeries, digest: &str) {
    ts.metadata.insert("levsim".into(), VERSION.into());
    ts.metadata.insert("digest".into(), digest.into());
    ts.metadata.insert("psd_convention".into(), "one-sided".into());
}

fn write_trace(path: &Path, ts: &TimeSeries) -> Result<(), CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ts.write_csv(BufWriter::new(file))?;
    Ok(())
}

fn cmd_simulate(cli: &Cli) -> Result<(), CliError> {
    let sc = load_scenario(cli, true)?;
    let digest = sc.digest();
    let config = sc.sim_config()?;
    let feedback = sc.feedback_config(config.mode.f0_hz)?;

    let started = Instant::now();
    let mut trace = match feedback.mode {
        // Steady-state cooling gets the converged report alongside the trace.
        FeedbackMode::Cool => {
            let result = cold_damp(&config, &feedback)?;
            let mut ts = simulate(&config, &feedback)?;
            ts.metadata.insert("t_eff_k".into(), fmt_sci(result.t_eff));
            ts
        }
        _ => simulate(&config, &feedback)?,
    };
    eprintln!("simulate: wall {:.3} s", started.elapsed().as_secs_f64());

    stamp(&mut trace, &digest);
    let out = out_dir(cli)?;
    write_trace(&out.join("trace.csv"), &trace)?;

    let x2_mean = trace.samples.iter().map(|x| x * x).sum::<f64>() / trace.len() as f64;
    let x2_eq = equipartition_x2(config.mass, config.mode.f0_hz, config.temperature);
    let prov = Provenance { digest: digest.clone(), seed: Some(config.rng_seed) };
    let mut pairs = vec![
        ("f0_hz", fmt_sci(config.mode.f0_hz)),
        ("gamma_2pi_hz", fmt_sci(config.mode.gamma_over_2pi())),
        ("mass_kg", fmt_sci(config.mass)),
        ("temperature_k", fmt_sci(config.temperature)),
        ("duration_s", fmt_sci(config.duration)),
        ("dt_s", fmt_sci(config.dt)),
        ("n_samples", trace.len().to_string()),
        ("x2_mean_m2", fmt_sci(x2_mean)),
        ("x2_equipartition_m2", fmt_sci(x2_eq)),
        ("trace_digest", trace.digest()),
    ];
    if let Some(t_eff) = trace.metadata.get("t_eff_k") {
        pairs.push(("t_eff_k", t_eff.clone()));
    }
    write_kv(&out.join("summary.txt"), &prov, &[], &pairs)?;

    println!("wrote {}/trace.csv and summary.txt", out.display());
    for (k, v) in &pairs {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_protocol(cli: &Cli) -> Result<(), CliError> {
    let sc = load_scenario(cli, true)?;
    let digest = sc.digest();
    let config = sc.sim_config()?;
    let feedback = sc.feedback_config(config.mode.f0_hz)?;
    if feedback.mode != FeedbackMode::Excite {
        return Err(CliError::Config("protocol needs feedback.mode = \"excite\"".into()));
    }
    let protocol = sc.protocol_config()?;

    let started = Instant::now();
    let mut result = run_protocol(&config, &feedback, &protocol)?;
    eprintln!("protocol: wall {:.3} s", started.elapsed().as_secs_f64());

    stamp(&mut result.excite_phase, &digest);
    stamp(&mut result.ringdown_phase, &digest);
    let out = out_dir(cli)?;
    write_trace(&out.join("excite.csv"), &result.excite_phase)?;
    write_trace(&out.join("ringdown.csv"), &result.ringdown_phase)?;

    let prov = Provenance { digest: digest.clone(), seed: Some(config.rng_seed) };
    let pairs = vec![
        ("f0_hz", fmt_sci(config.mode.f0_hz)),
        ("gamma_2pi_hz", fmt_sci(config.mode.gamma_over_2pi())),
        ("target_amplitude_factor", fmt_sci(protocol.target_amplitude_factor)),
        ("achieved_x0_m", fmt_sci(result.achieved_x0)),
        ("background_rms_m", fmt_sci(result.background_rms)),
        ("excite_duration_s", fmt_sci(result.excite_phase.duration())),
        ("ringdown_duration_s", fmt_sci(result.ringdown_phase.duration())),
        ("ringdown_digest", result.ringdown_phase.digest()),
    ];
    write_kv(&out.join("summary.txt"), &prov, &[], &pairs)?;

    println!("wrote {}/excite.csv, ringdown.csv, summary.txt", out.display());
    for (k, v) in &pairs {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_fit(
    cli: &Cli,
    input: Option<&Path>,
    f0_flag: Option<f64>,
    gamma_flag: Option<f64>,
) -> Result<(), CliError> {
    // Echo mode: no trace, just the Q arithmetic for a quoted rate.
    if let Some(gamma_2pi) = gamma_flag {
        let f0 = f0_flag.ok_or_else(|| {
            CliError::Config("fit with --gamma-2pi-hz also needs --f0-hz".into())
        })?;
        if !(gamma_2pi > 0.0 && f0 > 0.0) {
            return Err(CliError::Config("--f0-hz and --gamma-2pi-hz must be positive".into()));
        }
        let q = f0 / gamma_2pi;
        println!("Q = {:.1e} (= f0 / (gamma/2pi))", q);
        println!("f0_hz={}", fmt_sci(f0));
        println!("gamma_2pi_hz={}", fmt_sci(gamma_2pi));
        println!("q={}", fmt_sci(q));
        return Ok(());
    }

    let input = input.ok_or_else(|| {
        CliError::Config("fit needs --input <trace.csv>, or --f0-hz with --gamma-2pi-hz".into())
    })?;
    let sc = load_scenario(cli, true)?;
    let digest = sc.digest();
    let options = sc.fit_options();
    let f0 = match f0_flag {
        Some(f0) => f0,
        None => sc.mode()?.f0_hz,
    };
    let x_th2 = equipartition_x2(sc.mass()?, f0, sc.temperature()?);

    let file =
        File::open(input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let trace = TimeSeries::read_csv(BufReader::new(file))?;

    let started = Instant::now();
    let env = if options.carrier_free {
        envelope_binned(&trace, f0, options.bin_width)?
    } else {
        envelope(&trace, f0, options.lockin_bandwidth_hz, options.bin_width)?
    };
    let fit = fit_decay_thermal(&env, x_th2)?;
    eprintln!("fit: wall {:.3} s", started.elapsed().as_secs_f64());

    let gamma_2pi = fit.gamma_hat / TAU;
    let ci_2pi = fit.gamma_ci95 / TAU;
    let q = f0 / gamma_2pi;
    let seed = trace.metadata.get("seed").and_then(|s| s.parse().ok());
    let prov = Provenance { digest: digest.clone(), seed };
    let header = vec![("input_digest".to_string(), trace.digest())];
    let pairs = vec![
        ("f0_hz", fmt_sci(f0)),
        ("gamma_2pi_hz", fmt_sci(gamma_2pi)),
        ("gamma_ci95_2pi_hz", fmt_sci(ci_2pi)),
        ("q", fmt_sci(q)),
        ("x0_sq_m2", fmt_sci(fit.x0_sq)),
        ("thermal_floor_m2", fmt_sci(2.0 * x_th2)),
        ("reduced_chi2", fmt_sci(fit.reduced_chi2)),
        ("bins_used", fit.bins_used.to_string()),
        ("bins_dropped", fit.bins_dropped.to_string()),
    ];
    let out = out_dir(cli)?;
    write_kv(&out.join("fit.txt"), &prov, &header, &pairs)?;

    // Residual table over every envelope bin against the fitted model.
    let rows: Vec<Vec<Option<f64>>> = env
        .bin_centers
        .iter()
        .zip(env.x2_mean.iter().zip(&env.x2_stderr))
        .map(|(&t, (&y, &se))| {
            let model = fit.x0_sq * (-fit.gamma_hat * t).exp() + 2.0 * x_th2;
            let sigma = if se > 0.0 { Some((y - model) / se) } else { None };
            vec![Some(t), Some(y), Some(se), Some(model), sigma]
        })
        .collect();
    write_table(
        &out.join("residuals.csv"),
        &prov,
        &["bin_center_s", "x2_mean_m2", "x2_stderr_m2", "model_m2", "residual_stderr"],
        None,
        &rows,
    )?;

    println!(
        "Q = {:.1e} (= f0 / (gamma/2pi)), gamma/2pi = {} Hz +/- {} (95%)",
        q,
        fmt_sci(gamma_2pi),
        fmt_sci(ci_2pi)
    );
    for (k, v) in &pairs {
        println!("{k}={v}");
    }
    Ok(())
}

fn cmd_sensitivity(cli: &Cli) -> Result<(), CliError> {
    let sc = load_scenario(cli, false)?;
    let digest = sc.digest();
    let spec = sc.sweep_spec()?;

    let electron_line = spin_force(spec.gradient, BOHR_MAGNETON);
    let proton_line = spin_force(spec.gradient, PROTON_MOMENT);

    // Sweep points are independent; order is restored by collecting into
    // the mass-sorted row vector.
    let rows: Vec<Vec<Option<f64>>> = spec
        .masses
        .par_iter()
        .map(|&mass| {
            spec.temperatures
                .iter()
                .map(|&temp| {
                    let force = force_noise_density(mass, spec.gamma, temp);
                    let accel = accel_noise_density(mass, spec.gamma, temp);
                    vec![
                        Some(mass),
                        Some(temp),
                        Some(force.asd),
                        Some(accel.asd),
                        Some(accel.asd_g),
                        Some(electron_line),
                        Some(proton_line),
                    ]
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();

    let prov = Provenance { digest: digest.clone(), seed: None };
    let out = out_dir(cli)?;
    write_table(
        &out.join("curves.csv"),
        &prov,
        &[
            "mass_kg",
            "temperature_k",
            "force_asd_n_rthz",
            "accel_asd_m_s2_rthz",
            "accel_asd_g_rthz",
            "electron_force_n",
            "proton_force_n",
        ],
        None,
        &rows,
    )?;

    // Smallest detectable mass per bath temperature: where the thermal
    // force floor crosses each reference spin force.
    let threshold_rows: Vec<Vec<Option<f64>>> = spec
        .temperatures
        .iter()
        .map(|&temp| {
            let e = detectable_mass_threshold(spec.gradient, BOHR_MAGNETON, spec.gamma, temp);
            let p = detectable_mass_threshold(spec.gradient, PROTON_MOMENT, spec.gamma, temp);
            vec![Some(temp), Some(e), Some(p)]
        })
        .collect();
    write_table(
        &out.join("thresholds.csv"),
        &prov,
        &["temperature_k", "electron_threshold_mass_kg", "proton_threshold_mass_kg"],
        None,
        &threshold_rows,
    )?;

    println!(
        "wrote {}/curves.csv ({} rows) and thresholds.csv",
        out.display(),
        rows.len()
    );
    for row in &threshold_rows {
        println!(
            "temperature_k={} electron_threshold_mass_kg={} proton_threshold_mass_kg={}",
            fmt_sci(row[0].unwrap()),
            fmt_sci(row[1].unwrap()),
            fmt_sci(row[2].unwrap())
        );
    }
    Ok(())
}

fn cmd_isolation(cli: &Cli) -> Result<(), CliError> {
    let sc = load_scenario(cli, false)?;
    let digest = sc.digest();
    let (stages, f_hz) = sc.isolation_setup()?;

    let mut labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (i, stage) in stages.iter().enumerate() {
        let db = stage_isolation_db(stage, f_hz)?;
        labels.push((i + 1).to_string());
        rows.push(vec![
            Some(stage.load_mass),
            Some(stage.char_frequency_hz),
            stage.quality,
            Some(db),
        ]);
    }
    let total = chain_isolation_db(&stages, f_hz)?;
    labels.push("total".into());
    rows.push(vec![None, None, None, Some(total)]);

    let prov = Provenance { digest, seed: None };
    let out = out_dir(cli)?;
    write_table(
        &out.join("isolation.csv"),
        &prov,
        &["stage", "load_mass_kg", "char_frequency_hz", "quality", "isolation_db"],
        Some(&labels),
        &rows,
    )?;

    println!("isolation at {} Hz:", fmt_sci(f_hz));
    for (label, row) in labels.iter().zip(&rows) {
        println!("  stage {label}: {} dB", fmt_sci(row[3].unwrap()));
    }
    println!("wrote {}/isolation.csv", out.display());
    Ok(())
}

fn cmd_spin(cli: &Cli) -> Result<(), CliError> {
    let sc = load_scenario(cli, false)?;
    let digest = sc.digest();
    let setup = sc.spin_setup()?;

    let coupling = spin_coupling(&setup);
    let decoherence = thermal_decoherence(&setup.mode, setup.temperature);
    let coop = cooperativity(&setup)
        .ok_or_else(|| CliError::Analysis("cooperativity undefined: mode has no decay".into()))?;
    let coherence = coherence_criterion(&setup.mode, setup.temperature)
        .ok_or_else(|| CliError::Analysis("coherence criterion undefined: Q diverges".into()))?;

    let pairs = vec![
        ("gradient_t_m", fmt_sci(setup.gradient)),
        ("spin_moment_j_t", fmt_sci(setup.spin_moment)),
        ("spin_t2_s", fmt_sci(setup.spin_t2)),
        ("f0_hz", fmt_sci(setup.mode.f0_hz)),
        ("gamma_2pi_hz", fmt_sci(setup.mode.gamma_over_2pi())),
        ("mass_kg", fmt_sci(setup.mass)),
        ("temperature_k", fmt_sci(setup.temperature)),
        ("x_zp_m", fmt_sci(zero_point_motion(setup.mass, setup.mode.f0_hz))),
        ("lambda_2pi_hz", fmt_sci(coupling.lambda_over_2pi_hz)),
        ("n_bar", fmt_sci(decoherence.n_bar)),
        ("gamma_th_2pi_hz", fmt_sci(decoherence.gamma_th / TAU)),
        ("cooperativity", fmt_sci(coop)),
        ("omega0_q_over_2pi_hz", fmt_sci(coherence.omega0_q_over_2pi_hz)),
        ("kt_over_2pi_hbar_hz", fmt_sci(coherence.kt_over_2pi_hbar_hz)),
        ("coherence_satisfied", coherence.satisfied.to_string()),
    ];
    let prov = Provenance { digest, seed: None };
    let out = out_dir(cli)?;
    write_kv(&out.join("spin.txt"), &prov, &[], &pairs)?;

    println!("wrote {}/spin.txt", out.display());
    for (k, v) in &pairs {
        println!("{k}={v}");
    }
    Ok(())
}

