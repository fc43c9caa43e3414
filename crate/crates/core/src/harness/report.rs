use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::dataset::write_json;
use crate::error::Result;

/// A result set that can be written as CSV (plus JSON through serde).
pub trait Tabular: Serialize {
    fn csv_header(&self) -> &'static str;
    fn csv_rows(&self) -> Vec<String>;
    /// Whitespace-separated data for plotting, if the result has a curve.
    fn gnuplot(&self) -> Option<String> {
        None
    }
}

/// Fixed-precision float text used in every report.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        "inf".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub dat: Option<PathBuf>,
}

/// Writes `<stem>.csv`, `<stem>.json` and, when available, `<stem>.dat` into `dir`.
pub fn emit_report<R: Tabular>(results: &R, dir: impl AsRef<Path>, stem: &str) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut csv = String::from(results.csv_header());
    csv.push('\n');
    for row in results.csv_rows() {
        csv += &row;
        csv.push('\n');
    }
    let files = ReportFiles {
        csv: dir.join(format!("{stem}.csv")),
        json: dir.join(format!("{stem}.json")),
        dat: results.gnuplot().map(|_| dir.join(format!("{stem}.dat"))),
    };
    fs::write(&files.csv, csv)?;
    write_json(results, &files.json)?;
    if let (Some(path), Some(text)) = (&files.dat, results.gnuplot()) {
        fs::write(path, text)?;
    }
    Ok(files)
}
