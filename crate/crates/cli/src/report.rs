//! CSV and JSON emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::SweepRecord;
use crate::error::CliError;

/// Frozen column order of the sweep CSV.
pub const CSV_HEADER: &str = "eta_plus,eta_minus,mu_plus,mu_minus,L_used,dim,count,prediction,ratio,converged,oracle_count,oracle_gap,wall_seconds";

/// 17 significant digits, enough to round-trip any `f64`.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let row = [
            float(r.eta_plus),
            float(r.eta_minus),
            float(r.mu_plus),
            float(r.mu_minus),
            opt(r.l_used),
            opt(r.dim),
            opt(r.count),
            opt(r.prediction.map(float)),
            opt(r.ratio.map(float)),
            r.converged.to_string(),
            opt(r.oracle_count),
            opt(r.oracle_gap),
            float(r.wall_seconds),
        ];
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
