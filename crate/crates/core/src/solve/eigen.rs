use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};
use serde::{Deserialize, Serialize};

use super::poisson::DirichletOperator;
use super::SolveOptions;
use crate::assembly::PimSystem;
use crate::error::{Error, Result};
use crate::linalg::DenseLu;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Largest `n` handled by the dense eigensolvers.
    pub dense_limit: usize,
    /// Allowed `max |Im γ|` relative to the largest returned `|γ|`.
    pub imag_tolerance: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 4000,
            imag_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// One vector per eigenvalue, `Σ v_i² V_i = 1`, largest entry positive.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Largest imaginary part among the returned eigenvalues (0 for the
    /// symmetric problem).
    pub max_imag_part: f64,
}

/// Scales `v` to unit `weights`-norm and flips it so its largest-magnitude
/// entry is positive (the first one on ties).
pub fn normalize_eigenvector(v: &mut [f64], weights: &[f64]) {
    let norm = v.iter().zip(weights).map(|(x, w)| x * x * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let mut pivot = 0.0f64;
    for &x in v.iter() {
        if x.abs() > pivot.abs() {
            pivot = x;
        }
    }
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn check_request(sys: &PimSystem, count: usize, opts: &EigenOptions) -> Result<()> {
    let n = sys.n();
    if n > opts.dense_limit {
        return Err(Error::DenseLimit {
            n,
            limit: opts.dense_limit,
        });
    }
    if count == 0 || count > n {
        return Err(Error::Config(format!(
            "cannot compute {count} eigenpairs of a system with {n} points"
        )));
    }
    if let Some(i) = sys.volume().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!("point {i} has zero volume weight")));
    }
    sys.require_connected()
}

/// `D_V · A` as a dense matrix.
fn weighted_dense(sys: &PimSystem, a: &crate::linalg::CsrMatrix) -> Mat<f64> {
    let v = sys.volume();
    let mut m = a.to_dense();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= v[i];
        }
    }
    m
}

fn symmetrize(m: &mut Mat<f64>) {
    for i in 0..m.nrows() {
        for j in 0..i {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

fn trace(m: &Mat<f64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

fn finish(sys: &PimSystem, mut pairs: Vec<(f64, Vec<f64>)>, max_imag_part: f64) -> EigenResult {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (eigenvalues, eigenvectors) = pairs
        .into_iter()
        .map(|(g, mut v)| {
            normalize_eigenvector(&mut v, sys.volume());
            (g, v)
        })
        .unzip();
    EigenResult {
        eigenvalues,
        eigenvectors,
        max_imag_part,
    }
}

/// Smallest `count` eigenpairs of `L u = γ I u`.
///
/// Both sides are symmetric after multiplying by `D_V`. `D_V I` need not be
/// definite, so the pencil is shifted: with `A + σ M = C Cᵀ` (Cholesky) the
/// symmetric matrix `C⁻¹ M C⁻ᵀ` has eigenvalues `1 / (γ + σ)`, and its
/// largest ones give the smallest `γ`. Each eigenvalue is then refined by
/// its Rayleigh quotient.
pub fn eigen_neumann(sys: &PimSystem, count: usize, opts: &EigenOptions) -> Result<EigenResult> {
    check_request(sys, count, opts)?;
    let n = sys.n();
    let mut a = weighted_dense(sys, sys.l_unit());
    let mut m = weighted_dense(sys, sys.i_unit());
    symmetrize(&mut a);
    symmetrize(&mut m);
    let tm = trace(&m);
    if !(tm > 0.0) {
        return Err(Error::NotPositiveDefinite(
            "the mass matrix has non-positive trace".into(),
        ));
    }
    let sigma = 1e-3 * trace(&a).max(0.0) / tm;
    let shifted = Mat::from_fn(n, n, |i, j| a[(i, j)] + sigma * m[(i, j)]);
    let llt = shifted.llt(Side::Lower).map_err(|_| {
        Error::NotPositiveDefinite(
            "the shifted stiffness matrix is not positive definite; try the gaussian kernel or a larger bandwidth"
                .into(),
        )
    })?;
    let c = llt.L();
    let mut x = m.clone();
    solve_lower_triangular_in_place(c, x.as_mut(), Par::Seq);
    let mut w = x.transpose().to_owned();
    solve_lower_triangular_in_place(c, w.as_mut(), Par::Seq);
    symmetrize(&mut w);
    let evd = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let positive: Vec<usize> = (0..n).rev().filter(|&k| s[k] > 0.0).take(count).collect();
    if positive.len() < count {
        return Err(Error::NotPositiveDefinite(format!(
            "only {} eigenvalues of the shifted pencil are positive",
            positive.len()
        )));
    }
    let mut y = Mat::from_fn(n, count, |i, j| u[(i, positive[j])]);
    solve_upper_triangular_in_place(c.transpose(), y.as_mut(), Par::Seq);
    let pairs = (0..count)
        .map(|j| {
            let v: Vec<f64> = (0..n).map(|i| y[(i, j)]).collect();
            let col = crate::linalg::col_mat(&v);
            let av = &a * &col;
            let mv = &m * &col;
            let num: f64 = (0..n).map(|i| v[i] * av[(i, 0)]).sum();
            let den: f64 = (0..n).map(|i| v[i] * mv[(i, 0)]).sum();
            let gamma = if den != 0.0 {
                num / den
            } else {
                1.0 / s[positive[j]] - sigma
            };
            (gamma, v)
        })
        .collect();
    Ok(finish(sys, pairs, 0.0))
}

/// Smallest `count` eigenpairs of the penalized problem `K u = γ I u`.
///
/// `K` is non-symmetric, so the eigenvalues `1/γ` of `K⁻¹ I` are computed
/// with a dense non-symmetric eigensolver; eigenvalues whose imaginary part
/// exceeds the tolerance are rejected.
pub fn eigen_dirichlet(sys: &PimSystem, count: usize, beta: f64, opts: &EigenOptions) -> Result<EigenResult> {
    check_request(sys, count, opts)?;
    let n = sys.n();
    let solve_opts = SolveOptions::default();
    let op = DirichletOperator::new(sys, beta, &solve_opts)?;
    let lu = DenseLu::new(op.k.to_dense().as_ref());
    let x = lu.solve_mat(sys.i_unit().to_dense().as_ref());
    if x.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::Linalg("the penalized operator is singular".into()));
    }
    let evd = x
        .eigen()
        .map_err(|e| Error::Linalg(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).filter(|&k| s[k].re > 0.0).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    if order.len() < count {
        return Err(Error::NotPositiveDefinite(format!(
            "only {} eigenvalues have positive real part",
            order.len()
        )));
    }
    order.truncate(count);
    let mut max_imag = 0.0f64;
    let mut largest = 0.0f64;
    let pairs = order
        .iter()
        .map(|&k| {
            let mu = s[k];
            let d = mu.re * mu.re + mu.im * mu.im;
            let (gre, gim) = (mu.re / d, -mu.im / d);
            max_imag = max_imag.max(gim.abs());
            largest = largest.max(gre.hypot(gim));
            // Rotate the phase so the largest entry is real, keep the real part.
            let mut p = 0;
            let mut pm = -1.0;
            for i in 0..n {
                let z = u[(i, k)];
                let a = z.re.hypot(z.im);
                if a > pm {
                    pm = a;
                    p = i;
                }
            }
            let z = u[(p, k)];
            let (cr, ci) = (z.re / pm, -z.im / pm);
            let v = (0..n).map(|i| u[(i, k)].re * cr - u[(i, k)].im * ci).collect();
            (gre, v)
        })
        .collect();
    let allowed = opts.imag_tolerance * largest;
    if max_imag > allowed {
        return Err(Error::SpuriousImaginary { max_imag, allowed });
    }
    Ok(finish(sys, pairs, max_imag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::geometry::{generate_disk_mesh, mesh_to_cloud, PointCloud};
    use crate::kernel::KernelSpec;
    use crate::weights::average_neighbor_distance;

    fn system(rings: usize, factor: f64) -> (PointCloud, PimSystem) {
        let cloud = mesh_to_cloud(&generate_disk_mesh(rings).unwrap()).unwrap();
        let delta = average_neighbor_distance(cloud.points(), 2, 10).unwrap();
        let sys = assemble(&cloud, &KernelSpec::gaussian((factor * delta).powi(2)).unwrap()).unwrap();
        (cloud, sys)
    }

    #[test]
    fn neumann_spectrum_starts_at_zero_with_constant_mode() {
        let (_, sys) = system(8, 0.5);
        let r = eigen_neumann(&sys, 4, &EigenOptions::default()).unwrap();
        assert!(r.eigenvalues[0].abs() < 1e-8, "{:?}", r.eigenvalues);
        let v0 = &r.eigenvectors[0];
        let spread = v0.iter().fold(0.0f64, |a, x| a.max((x - v0[0]).abs()));
        assert!(spread < 1e-6);
        // First nonzero Neumann eigenvalue of the unit disk is j'_{1,1}² ≈ 3.39,
        // and it is double.
        assert!((r.eigenvalues[1] - 3.39).abs() < 0.6, "{:?}", r.eigenvalues);
        assert!((r.eigenvalues[1] - r.eigenvalues[2]).abs() < 0.1 * r.eigenvalues[1]);
        for w in r.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let norm: f64 = r.eigenvectors[1].iter().zip(sys.volume()).map(|(x, v)| x * x * v).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_first_eigenvalue_is_near_j01_squared() {
        let (_, sys) = system(8, 0.75);
        let r = eigen_dirichlet(&sys, 3, 1e-4, &EigenOptions::default()).unwrap();
        // j_{0,1}² ≈ 5.783
        assert!((r.eigenvalues[0] - 5.783).abs() < 1.0, "{:?}", r.eigenvalues);
        assert!(r.max_imag_part <= 1e-8 * r.eigenvalues[2]);
        assert!(
            r.eigenvectors[0].iter().all(|&x| x > -1e-6),
            "ground state has one sign"
        );
    }

    #[test]
    fn size_and_count_limits() {
        let (_, sys) = system(5, 0.5);
        let small = EigenOptions {
            dense_limit: 10,
            ..EigenOptions::default()
        };
        assert!(matches!(eigen_neumann(&sys, 2, &small), Err(Error::DenseLimit { .. })));
        assert!(matches!(
            eigen_neumann(&sys, 0, &EigenOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn normalization_fixes_sign_and_scale() {
        let mut v = vec![1.0, -3.0, 2.0];
        normalize_eigenvector(&mut v, &[1.0, 1.0, 2.0]);
        let n: f64 = v.iter().zip([1.0, 1.0, 2.0]).map(|(x, w)| x * x * w).sum();
        assert!((n - 1.0).abs() < 1e-15);
        assert!(v[1] > 0.0 && v[0] < 0.0);
    }
}
