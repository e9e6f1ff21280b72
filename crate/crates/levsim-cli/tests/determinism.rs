//! Rerunning any command with the same scenario and seed must reproduce
//! every artifact byte for byte, fast. One subprocess pair per subcommand.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use common::{config, levsim, stderr};

fn check(name: &str, pass: bool, detail: &str) {
    println!("[{}] {}: {}", if pass { "PASS" } else { "FAIL" }, name, detail);
    assert!(pass, "{name}: {detail}");
}

fn run_into(dir: &Path, args: &[&str]) -> f64 {
    let mut full: Vec<&str> = args.to_vec();
    let out_s = dir.to_str().unwrap().to_string();
    full.push("--out");
    full.push(&out_s);
    let started = Instant::now();
    let out = levsim(&full);
    let wall = started.elapsed().as_secs_f64();
    assert!(out.status.success(), "{args:?} failed: {}", stderr(&out));
    wall
}

fn assert_identical(a: &Path, b: &Path, files: &[&str]) {
    for f in files {
        let bytes_a = fs::read(a.join(f)).unwrap_or_else(|_| panic!("{f} missing in {a:?}"));
        let bytes_b = fs::read(b.join(f)).unwrap_or_else(|_| panic!("{f} missing in {b:?}"));
        assert_eq!(bytes_a, bytes_b, "{f} differs between reruns");
    }
}

#[test]
fn identical_inputs_reproduce_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let ringdown_cfg = config("mode1_ringdown.cfg");
    let thermal_cfg = config("mode1_thermal.cfg");
    let ringdown_s = ringdown_cfg.to_str().unwrap();
    let thermal_s = thermal_cfg.to_str().unwrap();

    let mut commands = 0;
    let mut max_wall: f64 = 0.0;
    let mut repeat = |name: &str, args: &[&str], files: &[&str]| {
        let a = root.join(format!("{name}_a"));
        let b = root.join(format!("{name}_b"));
        let wall_a = run_into(&a, args);
        let wall_b = run_into(&b, args);
        assert_identical(&a, &b, files);
        commands += 1;
        max_wall = max_wall.max(wall_a).max(wall_b);
    };

    repeat(
        "protocol",
        &["protocol", "--config", ringdown_s],
        &["excite.csv", "ringdown.csv", "summary.txt"],
    );
    repeat(
        "simulate",
        &["simulate", "--config", thermal_s],
        &["trace.csv", "summary.txt"],
    );
    let trace = root.join("protocol_a").join("ringdown.csv");
    let trace_s = trace.to_str().unwrap().to_string();
    repeat(
        "fit",
        &["fit", "--input", &trace_s, "--config", ringdown_s],
        &["fit.txt", "residuals.csv"],
    );
    repeat("sensitivity", &["sensitivity"], &["curves.csv", "thresholds.csv"]);
    repeat("isolation", &["isolation"], &["isolation.csv"]);
    repeat("spin", &["spin"], &["spin.txt"]);

    let pass = commands == 6 && max_wall < 1.0;
    check(
        "determinism_and_runtime",
        pass,
        &format!(
            "{commands} commands byte-identical on rerun, slowest invocation {max_wall:.2} s \
             (gate 1 s)"
        ),
    );
}
