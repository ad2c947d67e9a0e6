//! Jacobi-preconditioned CG and restarted GMRES on abstract operators.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - A x‖₂ / ‖b‖₂` of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse diagonal for Jacobi preconditioning; zero diagonals map to 1.
pub fn jacobi(diag: &[f64]) -> Vec<f64> {
    diag.iter()
        .map(|&d| if d != 0.0 && d.is_finite() { 1.0 / d } else { 1.0 })
        .collect()
}

fn true_residual(apply: &impl Fn(&[f64], &mut [f64]), b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; b.len()];
    apply(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Preconditioned conjugate gradients for symmetric positive
/// (semi)definite operators with a consistent right-hand side.
pub fn cg(
    apply: impl Fn(&[f64], &mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return KrylovOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut iterations = 0;
    let mut relative_residual = f64::INFINITY;
    // Restart from the true residual when the recursive one has drifted.
    for _ in 0..4 {
        let mut r = true_residual(&apply, b, &x);
        relative_residual = norm2(&r) / bnorm;
        if relative_residual <= tol || iterations >= max_iter {
            break;
        }
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, m)| a * m).collect();
        let mut p = z.clone();
        let mut rz = dotp(&r, &z);
        let mut ap = vec![0.0; n];
        let mut rel = relative_residual;
        while rel > tol && iterations < max_iter {
            apply(&p, &mut ap);
            let pap = dotp(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            rel = norm2(&r) / bnorm;
            if rel <= tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dotp(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if rel > tol {
            relative_residual = norm2(&true_residual(&apply, b, &x)) / bnorm;
            break;
        }
    }
    KrylovOutcome {
        x,
        iterations,
        relative_residual,
        converged: relative_residual <= tol,
    }
}

/// Right-preconditioned restarted GMRES(`restart`) with Jacobi
/// preconditioning; convergence is judged on the true residual.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    restart: usize,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return KrylovOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = restart.max(1);
    let mut iterations = 0;
    let mut tmp = vec![0.0; n];
    let mut r = true_residual(&apply, b, &x);
    let mut rel = norm2(&r) / bnorm;
    while rel > tol && iterations < max_iter {
        let beta = norm2(&r);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns, Givens rotations and the rotated rhs.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < max_iter {
            let z: Vec<f64> = basis[k].iter().zip(inv_diag).map(|(v, d)| v * d).collect();
            apply(&z, &mut tmp);
            let mut w = tmp.clone();
            let mut col = vec![0.0; k + 2];
            // Modified Gram-Schmidt, applied twice for stability.
            for _ in 0..2 {
                for (j, q) in basis.iter().enumerate() {
                    let hij = dotp(&w, q);
                    col[j] += hij;
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= hij * qi);
                }
            }
            let wn = norm2(&w);
            col[k + 1] = wn;
            for (j, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[j], col[j + 1]);
                col[j] = c * a + s * bb;
                col[j + 1] = -s * a + c * bb;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let rho = a.hypot(bb);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (a / rho, bb / rho) };
            col[k] = rho;
            col[k + 1] = 0.0;
            cs.push((c, s));
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;
            iterations += 1;
            let estimate = g[k].abs() / bnorm;
            if estimate <= tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back-substitute the k×k triangular system.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * basis[j][i] * inv_diag[i];
            }
        }
        r = true_residual(&apply, b, &x);
        let new_rel = norm2(&r) / bnorm;
        if !(new_rel < rel) && k < m {
            // Stagnation (lucky breakdown without progress).
            rel = new_rel;
            break;
        }
        rel = new_rel;
    }
    KrylovOutcome {
        x,
        iterations,
        relative_residual: rel,
        converged: rel <= tol,
    }
}

impl KrylovOutcome {
    pub fn into_result(self, method: &'static str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                method,
                iterations: self.iterations,
                residual: self.relative_residual,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0 + 0.01 * i as f64)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(n, n, rows)
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = laplacian_1d(200);
        let x_true: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.mul_vec(&x_true).unwrap();
        let out = cg(
            |x, y| a.mul_vec_into(x, y).unwrap(),
            &jacobi(&a.diagonal()),
            &b,
            None,
            1e-12,
            2000,
        );
        assert!(out.converged);
        for (x, t) in out.x.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-8);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 150;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0)];
                if i > 0 {
                    r.push((i - 1, -2.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -0.5));
                }
                if i + 7 < n {
                    r.push((i + 7, 0.3));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(n, n, rows);
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 + (i % 5) as f64).collect();
        let b = a.mul_vec(&x_true).unwrap();
        for restart in [5, 50] {
            let out = gmres(
                |x, y| a.mul_vec_into(x, y).unwrap(),
                &jacobi(&a.diagonal()),
                &b,
                None,
                restart,
                1e-11,
                5000,
            );
            assert!(out.converged, "restart {restart}: {}", out.relative_residual);
            for (x, t) in out.x.iter().zip(&x_true) {
                assert!((x - t).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = laplacian_1d(5);
        let out = gmres(
            |x, y| a.mul_vec_into(x, y).unwrap(),
            &[1.0; 5],
            &[0.0; 5],
            None,
            3,
            1e-9,
            10,
        );
        assert_eq!(out.x, vec![0.0; 5]);
        assert!(out.converged);
    }

    #[test]
    fn iteration_cap_reported() {
        let a = laplacian_1d(100);
        let b = vec![1.0; 100];
        let out = cg(|x, y| a.mul_vec_into(x, y).unwrap(), &[1.0; 100], &b, None, 1e-14, 3);
        assert!(!out.converged);
        assert!(matches!(
            out.into_result("cg"),
            Err(Error::NotConverged { iterations: 3, .. })
        ));
    }
}
