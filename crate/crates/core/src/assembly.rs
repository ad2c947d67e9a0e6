//! Discrete operators on a weighted point cloud:
//!
//! * `L_ij = -(1/t) R_t(p_i, p_j) V_j` for `i ≠ j`, `L_ii = -Σ_{j≠i} L_ij`
//! * `I_ij = R̄_t(p_i, p_j) V_j`
//! * `B_ij = R̄_t(p_i, s_j) A_j`
//!
//! The matrices are stored with the kernel normalizer `C_t` factored out.
//! Every equation is homogeneous in `C_t`, so the solvers work with the
//! normalizer-free operators and their outputs do not depend on it; the
//! public accessors apply it.

use std::borrow::Cow;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dist2, PointCloud};
use crate::kernel::KernelSpec;
use crate::linalg::CsrMatrix;
use crate::spatial::GridIndex;

#[derive(Debug, Clone)]
pub struct PimSystem {
    l: CsrMatrix,
    i_mat: CsrMatrix,
    b: CsrMatrix,
    kernel: KernelSpec,
    /// `C_t`; `l`, `i_mat` and `b` hold the operators for `C_t = 1`.
    c_t: f64,
    support_radius: f64,
    volume: Vec<f64>,
    boundary: Vec<usize>,
    boundary_weights: Vec<f64>,
    warnings: Vec<String>,
}

struct Row {
    cols: Vec<usize>,
    l: Vec<f64>,
    i: Vec<f64>,
}

fn concat(n: usize, ncols: usize, rows: &[Vec<(usize, f64)>]) -> CsrMatrix {
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let nnz = rows.iter().map(Vec::len).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for r in rows {
        cols.extend(r.iter().map(|e| e.0));
        vals.extend(r.iter().map(|e| e.1));
        row_ptr.push(cols.len());
    }
    CsrMatrix::new(n, ncols, row_ptr, cols, vals).expect("rows are sorted by construction")
}

/// Builds `L`, `I` and `B` using a bucket grid over the kernel support.
pub fn assemble(cloud: &PointCloud, spec: &KernelSpec) -> Result<PimSystem> {
    spec.validate()?;
    let volume = cloud
        .volume_weights()
        .ok_or_else(|| Error::WeightsRequired("the cloud has no volume weights; estimate or load them first".into()))?
        .to_vec();
    let boundary_weights = cloud.boundary_weights().unwrap_or(&[]).to_vec();
    if boundary_weights.len() != cloud.boundary_len() {
        return Err(Error::WeightsRequired("the cloud has no boundary weights".into()));
    }
    let points = cloud.points();
    let n = points.len();
    let radius = spec.support_radius();
    let grid = GridIndex::new(points, radius);

    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |nb, i| {
            grid.within_radius(&points[i], radius, nb);
            let mut row = Row {
                cols: Vec::with_capacity(nb.len()),
                l: Vec::with_capacity(nb.len()),
                i: Vec::with_capacity(nb.len()),
            };
            let mut diag_pos = None;
            let mut diag = 0.0;
            for &j in nb.iter() {
                let r = spec.scaled_arg(dist2(&points[i], &points[j]));
                let rbar = spec.profile_bar(r);
                if j == i {
                    diag_pos = Some(row.cols.len());
                    row.cols.push(j);
                    row.l.push(0.0);
                    row.i.push(rbar * volume[j]);
                    continue;
                }
                let rv = spec.profile(r);
                if rv == 0.0 && rbar == 0.0 {
                    continue;
                }
                let lij = -rv * volume[j] / spec.t;
                diag -= lij;
                row.cols.push(j);
                row.l.push(lij);
                row.i.push(rbar * volume[j]);
            }
            if let Some(p) = diag_pos {
                row.l[p] = diag;
            }
            row
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let nnz = rows.iter().map(|r| r.cols.len()).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut lv = Vec::with_capacity(nnz);
    let mut iv = Vec::with_capacity(nnz);
    for r in rows {
        cols.extend_from_slice(&r.cols);
        lv.extend_from_slice(&r.l);
        iv.extend_from_slice(&r.i);
        row_ptr.push(cols.len());
    }
    let l = CsrMatrix::new(n, n, row_ptr.clone(), cols.clone(), lv)?;
    let i_mat = CsrMatrix::new(n, n, row_ptr, cols, iv)?;

    let bpoints = cloud.boundary_points();
    let m = bpoints.len();
    let b = if m == 0 {
        CsrMatrix::zeros(n, 0)
    } else {
        let bgrid = GridIndex::new(&bpoints, radius);
        let brows: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |nb, i| {
                bgrid.within_radius(&points[i], radius, nb);
                nb.iter()
                    .filter_map(|&j| {
                        let v = spec.profile_bar(spec.scaled_arg(dist2(&points[i], &bpoints[j])));
                        (v != 0.0).then(|| (j, v * boundary_weights[j]))
                    })
                    .collect()
            })
            .collect();
        concat(n, m, &brows)
    };

    let mut warnings = Vec::new();
    let spacing = min_spacing(&grid, cloud);
    if spacing.is_finite() && radius < spacing {
        let w = format!(
            "kernel support under-resolved: support radius {radius:.3e} is below the minimum point spacing {spacing:.3e}"
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    let system = PimSystem {
        l,
        i_mat,
        b,
        kernel: *spec,
        c_t: spec.c_t,
        support_radius: radius,
        volume,
        boundary: cloud.boundary().to_vec(),
        boundary_weights,
        warnings,
    };
    let isolated = system.isolated_points();
    if !isolated.is_empty() {
        log::warn!(
            "{} point(s) have no neighbour inside the kernel support",
            isolated.len()
        );
    }
    Ok(system)
}

fn min_spacing(grid: &GridIndex, cloud: &PointCloud) -> f64 {
    cloud
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, p)| grid.nearest(p, 1, Some(i)).first().map_or(f64::INFINITY, |e| e.1))
        .reduce(|| f64::INFINITY, f64::min)
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl PimSystem {
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    fn normalized<'a>(&self, m: &'a CsrMatrix) -> Cow<'a, CsrMatrix> {
        if self.c_t == 1.0 {
            Cow::Borrowed(m)
        } else {
            Cow::Owned(m.scaled(self.c_t))
        }
    }

    pub fn l(&self) -> Cow<'_, CsrMatrix> {
        self.normalized(&self.l)
    }

    pub fn i_mat(&self) -> Cow<'_, CsrMatrix> {
        self.normalized(&self.i_mat)
    }

    pub fn b(&self) -> Cow<'_, CsrMatrix> {
        self.normalized(&self.b)
    }

    /// The kernel normalizer `C_t`.
    pub fn normalizer(&self) -> f64 {
        self.c_t
    }

    pub(crate) fn l_unit(&self) -> &CsrMatrix {
        &self.l
    }

    pub(crate) fn i_unit(&self) -> &CsrMatrix {
        &self.i_mat
    }

    pub(crate) fn b_unit(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn volume(&self) -> &[f64] {
        &self.volume
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Points whose `L` row has no off-diagonal entry.
    pub fn isolated_points(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| {
                let (cols, vals) = self.l.row(i);
                !cols.iter().zip(vals).any(|(&c, &v)| c != i && v != 0.0)
            })
            .collect()
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        let isolated = self.isolated_points();
        match isolated.first() {
            None => Ok(()),
            Some(&first) => Err(Error::IsolatedPoints {
                count: isolated.len(),
                first,
            }),
        }
    }

    fn scale(&self, mut y: Vec<f64>) -> Vec<f64> {
        if self.c_t != 1.0 {
            y.iter_mut().for_each(|x| *x *= self.c_t);
        }
        y
    }

    pub fn apply_l(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.scale(self.apply_l_unit(u)?))
    }

    pub fn apply_i(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.scale(self.apply_i_unit(u)?))
    }

    pub fn apply_b(&self, g: &[f64]) -> Result<Vec<f64>> {
        Ok(self.scale(self.apply_b_unit(g)?))
    }

    pub(crate) fn apply_l_unit(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), u.len())?;
        self.l.mul_vec(u)
    }

    pub(crate) fn apply_i_unit(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), u.len())?;
        self.i_mat.mul_vec(u)
    }

    pub(crate) fn apply_b_unit(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m(), g.len())?;
        self.b.mul_vec(g)
    }

    /// Writes `L.mtx`, `I.mtx` and `B.mtx` into `dir`.
    pub fn dump_matrix_market(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.l().write_matrix_market(dir.join("L.mtx"))?;
        self.i_mat().write_matrix_market(dir.join("I.mtx"))?;
        self.b().write_matrix_market(dir.join("B.mtx"))?;
        Ok(())
    }
}
