//! CSV (RFC 4180) and JSON writers for run outputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::experiment::{ConvergenceRow, SCHEMA_VERSION};
use crate::error::Result;
use crate::geometry::PointCloud;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)?)
}

/// `point_index,x,y[,z],u`.
pub fn solution_csv(path: &Path, cloud: &PointCloud, u: &[f64]) -> Result<()> {
    let d = cloud.ambient_dim().max(2);
    let mut w = writer(path)?;
    let mut header = vec!["point_index", "x", "y"];
    if d == 3 {
        header.push("z");
    }
    header.push("u");
    w.write_record(&header)?;
    for (i, (p, x)) in cloud.points().iter().zip(u).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(p[..d].iter().map(f64::to_string));
        rec.push(x.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `index,eigenvalue`.
pub fn spectrum_csv(path: &Path, eigenvalues: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["index", "eigenvalue"])?;
    for (i, g) in eigenvalues.iter().enumerate() {
        w.write_record([i.to_string(), g.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `iteration,boundary_residual`.
pub fn history_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iteration", "boundary_residual"])?;
    for (i, r) in history.iter().enumerate() {
        w.write_record([(i + 1).to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Convergence table; columns without data in any row are omitted.
pub fn convergence_csv(out: &mut impl Write, rows: &[ConvergenceRow]) -> Result<()> {
    type Col = (&'static str, fn(&ConvergenceRow) -> Option<f64>);
    let cols: [Col; 6] = [
        ("eigenvalue", |r| r.eigenvalue),
        ("exact_eigenvalue", |r| r.exact_eigenvalue),
        ("fem_eigenvalue", |r| r.fem_eigenvalue),
        ("err_pim", |r| r.err_pim),
        ("err_fem", |r| r.err_fem),
        ("pim_vs_fem", |r| r.pim_vs_fem),
    ];
    let used: Vec<&Col> = cols.iter().filter(|c| rows.iter().any(|r| c.1(r).is_some())).collect();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    let mut header = vec!["level", "n", "h"];
    header.extend(used.iter().map(|c| c.0));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.level.to_string(), r.n.to_string(), r.h.to_string()];
        rec.extend(used.iter().map(|c| opt(c.1(r))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct ConvergenceReport<'a, P: Serialize> {
    pub schema_version: u32,
    pub params: &'a P,
    pub rows: &'a [ConvergenceRow],
    pub slopes: Vec<(String, f64)>,
}

impl<'a, P: Serialize> ConvergenceReport<'a, P> {
    pub fn new(params: &'a P, rows: &'a [ConvergenceRow], slopes: Vec<(String, f64)>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params,
            rows,
            slopes,
        }
    }
}
