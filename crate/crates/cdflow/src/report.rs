//! Report serialization: every run emits a JSON document embedding the
//! fully resolved configuration (grid, seed, version), so identical
//! invocations replay byte for byte. Time and parameter series go to CSV.

use crate::error::{CdError, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Resolved run configuration echoed into every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub family: String,
    pub beta: f64,
    pub grid_r: f64,
    pub grid_n: usize,
    pub tail_tol: f64,
    pub seed: u64,
    pub parameters: serde_json::Map<String, serde_json::Value>,
}

/// Top-level report wrapper.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub result: T,
}

pub fn make_report<T: Serialize>(config: RunConfig, result: T) -> Report<T> {
    Report { artifact: "cdflow", version: env!("CARGO_PKG_VERSION"), config, result }
}

pub fn to_json<T: Serialize>(report: &Report<T>) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| CdError::InvalidInput(format!("serialization failed: {e}")))
}

pub fn write_json<T: Serialize>(report: &Report<T>, path: &Path) -> Result<()> {
    let body = to_json(report)?;
    std::fs::write(path, body + "\n")
        .map_err(|e| CdError::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Write rows as CSV with the given header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CdError::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub fn csv_to_writer(w: &mut impl Write, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let err = |e: std::io::Error| CdError::InvalidInput(format!("csv write failed: {e}"));
    writeln!(w, "{}", header.join(",")).map_err(err)?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_is_deterministic() {
        let cfg = RunConfig {
            command: "constants".into(),
            family: "quadratic".into(),
            beta: 3.0,
            grid_r: 60.0,
            grid_n: 8001,
            tail_tol: 5e-10,
            seed: 42,
            parameters: serde_json::Map::new(),
        };
        let a = to_json(&make_report(cfg.clone(), 1.25f64)).unwrap();
        let b = to_json(&make_report(cfg, 1.25f64)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"config\""));
        assert!(a.contains("\"version\""));
    }
}
