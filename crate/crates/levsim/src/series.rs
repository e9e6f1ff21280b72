//! Uniformly sampled position records and their CSV interchange format.
//!
//! Files carry `# key=value` header lines (at minimum `seed` and `dt`)
//! followed by a `t,x` table. Floats are written in scientific notation with
//! six significant digits, so writing is deterministic and a read-back
//! followed by a write reproduces the file byte for byte.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `# dt=` header")]
    MissingDt,
    #[error("series is empty")]
    Empty,
}

/// Uniformly sampled scalar record, typically position in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Time of the first sample (s).
    pub t0: f64,
    /// Sample spacing (s).
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Header key-value pairs carried through file round trips.
    pub metadata: BTreeMap<String, String>,
}

/// Scientific notation with six significant digits; the one float format
/// used in emitted files.
pub fn fmt_sci(x: f64) -> String {
    format!("{:.5e}", x)
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Self {
        Self { t0, dt, samples, metadata: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time spanned from first to last sample (s).
    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len().saturating_sub(1) as f64
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + self.dt * index as f64
    }

    /// Sample rate (Hz).
    pub fn fs(&self) -> f64 {
        1.0 / self.dt
    }

    /// Content hash over exact sample bits, timing, and metadata.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.t0.to_bits().to_le_bytes());
        h.update(self.dt.to_bits().to_le_bytes());
        for s in &self.samples {
            h.update(s.to_bits().to_le_bytes());
        }
        for (k, v) in &self.metadata {
            h.update(k.as_bytes());
            h.update([0u8]);
            h.update(v.as_bytes());
            h.update([0u8]);
        }
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Write the `# key=value` + `t,x` format.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SeriesError> {
        for (k, v) in &self.metadata {
            if k != "seed" && k != "dt" && k != "t0" {
                writeln!(w, "# {k}={v}")?;
            }
        }
        let seed = self.metadata.get("seed").cloned().unwrap_or_else(|| "0".into());
        writeln!(w, "# seed={seed}")?;
        // The grid is authoritative: dt and t0 round-trip at full precision
        // so the derived time column is reproducible after read + rewrite.
        writeln!(w, "# dt={}", self.dt)?;
        writeln!(w, "# t0={}", self.t0)?;
        writeln!(w, "t,x")?;
        for (i, x) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", fmt_sci(self.t0 + self.dt * i as f64), fmt_sci(*x))?;
        }
        Ok(())
    }

    /// Read the format produced by [`TimeSeries::write_csv`]. Unknown header
    /// keys are preserved in `metadata`.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SeriesError> {
        let mut metadata = BTreeMap::new();
        let mut samples = Vec::new();
        let mut saw_table_header = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((k, v)) = rest.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !saw_table_header {
                if trimmed != "t,x" {
                    return Err(SeriesError::Parse {
                        line: lineno,
                        msg: format!("expected `t,x` table header, got `{trimmed}`"),
                    });
                }
                saw_table_header = true;
                continue;
            }
            let (_, x) = trimmed.split_once(',').ok_or_else(|| SeriesError::Parse {
                line: lineno,
                msg: "expected `t,x` row".into(),
            })?;
            let x: f64 = x.trim().parse().map_err(|e| SeriesError::Parse {
                line: lineno,
                msg: format!("bad float: {e}"),
            })?;
            samples.push(x);
        }
        if samples.is_empty() {
            return Err(SeriesError::Empty);
        }
        let dt: f64 = metadata
            .get("dt")
            .ok_or(SeriesError::MissingDt)?
            .parse()
            .map_err(|e| SeriesError::Parse { line: 0, msg: format!("bad dt: {e}") })?;
        let t0: f64 = match metadata.get("t0") {
            Some(v) => v.parse().map_err(|e| SeriesError::Parse {
                line: 0,
                msg: format!("bad t0: {e}"),
            })?,
            None => 0.0,
        };
        Ok(Self { t0, dt, samples, metadata })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("vec write");
        String::from_utf8(buf).expect("utf8")
    }
}
