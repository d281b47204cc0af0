//! File output: round-trip-exact float formatting, atomic writes, and
//! the CSV layouts shared by the command-line tools.
//!
//! Every file is written through a temporary sibling that is persisted
//! over the target in one rename, so readers never observe a partial
//! file and an interrupted run never corrupts previous output.

use std::io::Write;
use std::path::Path;

use crate::analysis::VerifyReport;
use crate::integrate::EnergyTrace;
use crate::spectral::{ResolventSweep, SpectrumReport};
use crate::Result;

/// Formats a float with 17 significant digits, enough for an exact
/// f64 round trip.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` atomically: a temporary file in the same
/// directory is persisted over the target in one rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Energy trace as `t,E` rows.
pub fn write_energy_csv(path: &Path, trace: &EnergyTrace) -> Result<()> {
    let mut out = String::from("t,E\n");
    for (t, e) in trace.times.iter().zip(&trace.energies) {
        out.push_str(&fmt(*t));
        out.push(',');
        out.push_str(&fmt(*e));
        out.push('\n');
    }
    atomic_write(path, &out)
}

/// Spectrum as `re,im` rows in the report's (Re, Im) order.
pub fn write_spectrum_csv(path: &Path, report: &SpectrumReport) -> Result<()> {
    let mut out = String::from("re,im\n");
    for z in &report.eigenvalues {
        out.push_str(&fmt(z.re));
        out.push(',');
        out.push_str(&fmt(z.im));
        out.push('\n');
    }
    atomic_write(path, &out)
}

/// Resolvent sweep as `lambda,norm` rows; excluded (near-singular)
/// samples are omitted.
pub fn write_resolvent_csv(path: &Path, sweep: &ResolventSweep) -> Result<()> {
    let mut out = String::from("lambda,norm\n");
    for (l, n) in sweep.lambdas.iter().zip(&sweep.norms) {
        if let Some(n) = n {
            out.push_str(&fmt(*l));
            out.push(',');
            out.push_str(&fmt(*n));
            out.push('\n');
        }
    }
    atomic_write(path, &out)
}

/// Verification rows as `check,predicted,measured,tolerance,pass`.
pub fn write_report_csv(path: &Path, report: &VerifyReport) -> Result<()> {
    let mut out = String::from("check,predicted,measured,tolerance,pass\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.check,
            fmt(row.predicted),
            fmt(row.measured),
            fmt(row.tolerance),
            row.pass
        ));
    }
    atomic_write(path, &out)
}

/// Nonzero matrix entries as `row,col,value` triplets.
pub fn write_matrix_triplets(path: &Path, m: &nalgebra::DMatrix<f64>) -> Result<()> {
    let mut out = String::from("row,col,value\n");
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                out.push_str(&format!("{i},{j},{}\n", fmt(v)));
            }
        }
    }
    atomic_write(path, &out)
}
