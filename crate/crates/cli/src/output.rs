//! Artifact persistence: sweep CSV with a stamp comment line, pretty JSON.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use korn::scaling::SweepRow;
use serde::Serialize;

use crate::config::Stamp;
use crate::error::{CliError, Result};

/// Frozen CSV column order.
pub const CSV_COLUMNS: [&str; 9] = ["h", "epsilon", "C1", "source", "bc_mode", "patch", "regime", "residual", "wall_seconds"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = File::create(path).map_err(|e| CliError::check(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

pub fn write_csv(path: &Path, rows: &[SweepRow], stamp: &Stamp) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# config_hash={} seed={}", stamp.config_hash, stamp.seed)?;
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a sweep CSV and the stamp from its comment line, if present.
pub fn read_csv(path: &Path) -> Result<(Option<Stamp>, Vec<SweepRow>)> {
    let file = File::open(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first)?;
    let stamp = parse_stamp(&first);
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(CliError::check(format!("{}: unexpected columns {header:?}", path.display())));
    }
    let rows = reader.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok((stamp, rows))
}

fn parse_stamp(line: &str) -> Option<Stamp> {
    let rest = line.trim().strip_prefix('#')?.trim();
    let mut hash = None;
    let mut seed = None;
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("config_hash=") {
            hash = Some(v.to_string());
        } else if let Some(v) = part.strip_prefix("seed=") {
            seed = v.parse().ok();
        }
    }
    Some(Stamp { config_hash: hash?, seed: seed? })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use korn::geometry::BcMode;
    use korn::scaling::{Regime, RowSource};

    #[test]
    fn csv_round_trips_rows_and_stamp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let row = SweepRow {
            h: 1.0 / 3.0,
            epsilon: 0.1,
            c1: 12.345678901234567,
            source: RowSource::Solver,
            bc_mode: BcMode::Free,
            patch: "cylinder".into(),
            regime: Regime::Regime2,
            residual: 1e-9,
            wall_seconds: 0.5,
            metadata: String::new(),
            resolved: true,
        };
        let stamp = Stamp { config_hash: "abc".into(), seed: 9 };
        write_csv(&path, std::slice::from_ref(&row), &stamp).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=abc seed=9\nh,epsilon,C1,source,bc_mode,patch,regime,residual,wall_seconds\n"));
        let (s, rows) = read_csv(&path).unwrap();
        assert_eq!(s, Some(stamp));
        assert_eq!(rows, vec![row]);
    }
}
