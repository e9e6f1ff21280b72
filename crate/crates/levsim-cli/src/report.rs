//! Byte-stable report emission.
//!
//! Every emitted file starts with `# key=value` provenance lines (tool
//! version, scenario digest, RNG seed where one exists) and contains no
//! wall-clock information, so rerunning a command with the same inputs
//! reproduces the file byte for byte. Numbers are written in scientific
//! notation with six significant digits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use levsim::series::fmt_sci;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance lines every artifact opens with.
pub struct Provenance {
    pub digest: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn lines(&self) -> Vec<String> {
        let mut lines = vec![format!("levsim={VERSION}"), format!("digest={}", self.digest)];
        if let Some(seed) = self.seed {
            lines.push(format!("seed={seed}"));
        }
        lines
    }
}

fn open(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// `key=value` report: provenance header, then one pair per line in the
/// given order. Values are pre-formatted by the caller.
pub fn write_kv(
    path: &Path,
    prov: &Provenance,
    extra_header: &[(String, String)],
    pairs: &[(&str, String)],
) -> Result<(), CliError> {
    let mut w = open(path)?;
    let mut inner = || -> io::Result<()> {
        for line in prov.lines() {
            writeln!(w, "# {line}")?;
        }
        for (k, v) in extra_header {
            writeln!(w, "# {k}={v}")?;
        }
        for (k, v) in pairs {
            writeln!(w, "{k}={v}")?;
        }
        w.flush()
    };
    inner().map_err(|e| io_err(path, e))
}

/// CSV table: provenance header, column line, then rows. Cells are
/// `Some(x)` for numbers (written via [`fmt_sci`]) or `None` for blanks,
/// except a leading label column when `labels` is given.
pub fn write_table(
    path: &Path,
    prov: &Provenance,
    columns: &[&str],
    labels: Option<&[String]>,
    rows: &[Vec<Option<f64>>],
) -> Result<(), CliError> {
    let mut w = open(path)?;
    let mut inner = || -> io::Result<()> {
        for line in prov.lines() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{}", columns.join(","))?;
        for (i, row) in rows.iter().enumerate() {
            let mut cells = Vec::with_capacity(columns.len());
            if let Some(labels) = labels {
                cells.push(labels[i].clone());
            }
            for cell in row {
                cells.push(cell.map(fmt_sci).unwrap_or_default());
            }
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    inner().map_err(|e| io_err(path, e))
}

/// A parsed table: header metadata, column names, and raw cell strings.
pub struct Table {
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

impl Table {
    /// Numeric view of a cell; `None` for blanks and labels.
    pub fn number(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col].parse().ok()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Read back the format [`write_table`] emits.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut metadata = BTreeMap::new();
    let mut columns: Vec<String> = Vec::new();
    let mut cells = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                metadata.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if columns.is_empty() {
            columns = line.split(',').map(str::to_string).collect();
            continue;
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != columns.len() {
            return Err(CliError::Config(format!(
                "{}: row has {} cells, header has {} columns",
                path.display(),
                row.len(),
                columns.len()
            )));
        }
        cells.push(row);
    }
    if columns.is_empty() {
        return Err(CliError::Config(format!("{}: no column header", path.display())));
    }
    Ok(Table { metadata, columns, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips_byte_for_byte() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let prov = Provenance { digest: "0123456789abcdef".into(), seed: Some(7) };
        let labels: Vec<String> = vec!["1".into(), "total".into()];
        let rows = vec![vec![Some(1.23456789e-13), Some(2.5)], vec![None, Some(55.44)]];
        write_table(&path, &prov, &["stage", "load_mass_kg", "isolation_db"], Some(&labels), &rows)
            .unwrap();
        let first = std::fs::read(&path).unwrap();

        let table = read_table(&path).unwrap();
        assert_eq!(table.metadata.get("seed").map(String::as_str), Some("7"));
        assert_eq!(table.columns, vec!["stage", "load_mass_kg", "isolation_db"]);
        assert_eq!(table.number(0, 1), Some(1.23457e-13));
        assert_eq!(table.number(1, 1), None);

        // Re-emit from the parsed numbers; identical bytes.
        let rows2: Vec<Vec<Option<f64>>> = (0..table.cells.len())
            .map(|r| (1..3).map(|c| table.number(r, c)).collect())
            .collect();
        let labels2: Vec<String> = table.cells.iter().map(|r| r[0].clone()).collect();
        let path2 = dir.path().join("t2.csv");
        write_table(
            &path2,
            &prov,
            &["stage", "load_mass_kg", "isolation_db"],
            Some(&labels2),
            &rows2,
        )
        .unwrap();
        assert_eq!(first, std::fs::read(&path2).unwrap());
    }
}
