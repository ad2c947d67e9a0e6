//! Ground truths and independent oracles: analytic radial solutions, the
//! unit-disk Laplacian spectrum, a P1 finite-element solver, and the error
//! metrics used to compare against them.

mod bessel;
mod fem;
mod truth;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bessel::{bessel_j, bessel_j_prime, bessel_zero, BesselKind};
pub use fem::{fem_eigen, fem_mass_matrix, fem_solve, FemProblem, FemSolution, FEM_EIGEN_DENSE_LIMIT};
pub use truth::{DiskSpectrum, RadialDomain, RadialTruth};

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `‖u - u_ref‖ / ‖u_ref‖` in the norm `‖f‖ = sqrt(Σ f_i² V_i)`.
///
/// With `adjust_constant` the V-weighted mean of `u - u_ref` is removed
/// first, which is the best constant shift for solutions defined up to one.
pub fn weighted_l2_error(u: &[f64], u_ref: &[f64], v: &[f64], adjust_constant: bool) -> Result<f64> {
    check_len(u_ref.len(), u.len())?;
    check_len(u_ref.len(), v.len())?;
    let mut d: Vec<f64> = u.iter().zip(u_ref).map(|(a, b)| a - b).collect();
    if adjust_constant {
        let vs: f64 = v.iter().sum();
        let c = d.iter().zip(v).map(|(x, w)| x * w).sum::<f64>() / vs;
        d.iter_mut().for_each(|x| *x -= c);
    }
    let num = d.iter().zip(v).map(|(x, w)| x * x * w).sum::<f64>().sqrt();
    let den = u_ref.iter().zip(v).map(|(x, w)| x * x * w).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(num / den)
}

/// Inner product for [`eigenspace_angle`].
#[derive(Debug, Clone, Copy)]
pub enum InnerProduct<'a> {
    Euclidean,
    Weighted(&'a [f64]),
}

/// Orthonormal basis (columns) of the span of `basis`.
fn orthonormal(basis: &[Vec<f64>], inner: InnerProduct<'_>) -> Result<Mat<f64>> {
    let n = basis[0].len();
    if basis.iter().any(|b| b.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: basis.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n),
        });
    }
    let scale: Vec<f64> = match inner {
        InnerProduct::Euclidean => vec![1.0; n],
        InnerProduct::Weighted(w) => {
            check_len(n, w.len())?;
            w.iter().map(|x| x.sqrt()).collect()
        }
    };
    let a = Mat::from_fn(n, basis.len(), |i, j| basis[j][i] * scale[i]);
    let svd = a.thin_svd().map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(lo > 1e-10 * hi) {
        return Err(Error::RankDeficient);
    }
    Ok(svd.U().to_owned())
}

fn singular_range(m: &Mat<f64>) -> Result<(f64, f64)> {
    let s = m
        .singular_values()
        .map_err(|e| Error::Linalg(format!("SVD failed: {e:?}")))?;
    Ok(s.iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x))))
}

/// Largest principal angle between `span(u)` and `span(v)`.
///
/// The cosine is `min_{x ∈ U, |x|=1} max_{y ∈ V, |y|=1} x·y`, taken over the
/// smaller of the two subspaces so the result is symmetric. It is evaluated
/// with `atan2(sin, cos)` from orthonormal bases, which stays accurate for
/// angles near 0 and near π/2.
pub fn eigenspace_angle(u: &[Vec<f64>], v: &[Vec<f64>], inner: InnerProduct<'_>) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::RankDeficient);
    }
    check_len(u[0].len(), v[0].len())?;
    let (small, large) = if u.len() <= v.len() { (u, v) } else { (v, u) };
    let qs = orthonormal(small, inner)?;
    let ql = orthonormal(large, inner)?;
    let proj = ql.transpose() * &qs;
    let (cos_min, _) = singular_range(&proj)?;
    let resid = &qs - &ql * &proj;
    let (_, sin_max) = singular_range(&resid)?;
    Ok(sin_max.atan2(cos_min))
}

/// Groups consecutive ascending eigenvalues whose gap is at most
/// `rel_tol · max(γ_i, 1)`.
pub fn merge_near_degenerate(eigenvalues: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &g) in eigenvalues.iter().enumerate() {
        match out.last_mut() {
            Some(c) if i > 0 && (g - eigenvalues[i - 1]).abs() <= rel_tol * eigenvalues[i - 1].max(1.0) => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Least-squares slope of `log err` against `log h`.
pub fn loglog_slope(h: &[f64], err: &[f64]) -> Result<f64> {
    check_len(h.len(), err.len())?;
    if h.len() < 2 || h.iter().chain(err).any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput(
            "slope fit needs at least two positive (h, error) pairs".into(),
        ));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("slope fit needs distinct h values".into()));
    }
    Ok(sxy / sxx)
}

/// Serializable selector mirroring [`InnerProduct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerProductKind {
    #[default]
    Euclidean,
    Weighted,
}
