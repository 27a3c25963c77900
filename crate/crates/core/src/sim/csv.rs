//! Plot-ready CSV output with full-precision floats.

use std::fmt::Write as _;
use std::path::Path;

use crate::c64;
use crate::error::{Error, Result};

use super::sweep::SimReport;

/// 17 significant digits.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn report_csv(report: &SimReport) -> String {
    let mut out = format!("{},ber,nmse,trials,ci_halfwidth\n", report.axis.name());
    for p in &report.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            float(p.x),
            float(p.ber),
            float(p.nmse),
            p.trials,
            float(p.ci_halfwidth)
        );
    }
    out
}

/// Grid rows `l,k,re,im,abs`.
pub fn grid_csv<L: std::fmt::Display>(cells: impl IntoIterator<Item = (L, L, c64)>) -> String {
    let mut out = String::from("l,k,re,im,abs\n");
    for (l, k, v) in cells {
        let _ = writeln!(
            out,
            "{l},{k},{},{},{}",
            float(v.re),
            float(v.im),
            float(v.norm())
        );
    }
    out
}

/// Header plus rows of floats.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cols: Vec<String> = row.into_iter().map(float).collect();
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_report(report: &SimReport, path: &Path) -> Result<()> {
    write_text(path, &report_csv(report))
}

pub fn emit_grid<L: std::fmt::Display>(
    cells: impl IntoIterator<Item = (L, L, c64)>,
    path: &Path,
) -> Result<()> {
    write_text(path, &grid_csv(cells))
}
