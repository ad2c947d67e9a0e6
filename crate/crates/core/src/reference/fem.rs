//! Linear (P1) finite elements on triangle meshes, planar or embedded in 3D.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{degenerate_threshold, dot, sub, SimplicialMesh};
use crate::linalg::{CsrMatrix, SparseLu};
use crate::solve::{normalize_eigenvector, EigenResult};
use crate::weights::mesh_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FemProblem {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FemSolution {
    pub u: Vec<f64>,
    /// Neumann only: `(∫f + ∮g) / |Ω|`, zero for compatible data.
    pub compatibility: Option<f64>,
}

/// Stiffness, consistent mass and boundary-edge mass matrices.
struct FemMatrices {
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    edge_mass: CsrMatrix,
    boundary: Vec<usize>,
}

fn matrices(mesh: &SimplicialMesh) -> Result<FemMatrices> {
    if mesh.intrinsic_dim != 2 {
        return Err(Error::Unsupported(format!(
            "the finite-element oracle handles triangle meshes only (intrinsic dimension {})",
            mesh.intrinsic_dim
        )));
    }
    let n = mesh.vertices.len();
    let mut k: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut m: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (c, t) in mesh.cells().enumerate() {
        let area = mesh.simplex_measure(t);
        if !(area > degenerate_threshold(&mesh.vertices, t)) {
            return Err(Error::DegenerateCell {
                index: c,
                measure: area,
            });
        }
        let p = |i: usize| &mesh.vertices[t[i % 3]];
        // Edge opposite each vertex; ∇φ_i · ∇φ_j = e_i · e_j / (4 A²).
        let e: Vec<_> = (0..3).map(|i| sub(p(i + 2), p(i + 1))).collect();
        for a in 0..3 {
            for b in 0..3 {
                k[t[a]].push((t[b], dot(&e[a], &e[b]) / (4.0 * area)));
                m[t[a]].push((t[b], area / if a == b { 6.0 } else { 12.0 }));
            }
        }
    }
    let mut em: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for s in mesh.boundary_cells() {
        let len = mesh.simplex_measure(s);
        for a in 0..2 {
            for b in 0..2 {
                em[s[a]].push((s[b], len / if a == b { 3.0 } else { 6.0 }));
            }
        }
    }
    Ok(FemMatrices {
        stiffness: CsrMatrix::from_rows(n, n, k),
        mass: CsrMatrix::from_rows(n, n, m),
        edge_mass: CsrMatrix::from_rows(n, n, em),
        boundary: mesh.boundary_vertices(),
    })
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Galerkin solution of `-Δu = f` with `∂u/∂n = g` (mean-zero) or `u = g`.
///
/// `f` holds vertex values, `g` values at the sorted boundary vertices. Loads
/// use the consistent mass matrices of the triangles and boundary edges.
pub fn fem_solve(mesh: &SimplicialMesh, problem: FemProblem, f: &[f64], g: &[f64]) -> Result<FemSolution> {
    let fm = matrices(mesh)?;
    let n = mesh.vertices.len();
    check_len(n, f.len())?;
    check_len(fm.boundary.len(), g.len())?;
    let mut gfull = vec![0.0; n];
    for (&v, &x) in fm.boundary.iter().zip(g) {
        gfull[v] = x;
    }
    let mut b = fm.mass.mul_vec(f)?;
    match problem {
        FemProblem::Neumann => {
            let eg = fm.edge_mass.mul_vec(&gfull)?;
            b.iter_mut().zip(&eg).for_each(|(x, y)| *x += y);
            // Bordered system [K c; cᵀ 0] with c = M 1: the multiplier is
            // Σb / Σc, and the remaining singular system is consistent, so
            // pinning one value and shifting afterwards solves it exactly.
            let c = fm.mass.mul_vec(&vec![1.0; n])?;
            let csum: f64 = c.iter().sum();
            let mu = b.iter().sum::<f64>() / csum;
            b.iter_mut().zip(&c).for_each(|(x, ci)| *x -= mu * ci);
            let rows = (0..n)
                .map(|i| {
                    if i == 0 {
                        return vec![(0, 1.0)];
                    }
                    let (cols, vals) = fm.stiffness.row(i);
                    cols.iter()
                        .zip(vals)
                        .filter(|(&j, _)| j != 0)
                        .map(|(&j, &v)| (j, v))
                        .collect()
                })
                .collect();
            b[0] = 0.0;
            let mut u = SparseLu::new(&CsrMatrix::from_rows(n, n, rows))?.solve(&b)?;
            let shift = u.iter().zip(&c).map(|(x, ci)| x * ci).sum::<f64>() / csum;
            u.iter_mut().for_each(|x| *x -= shift);
            Ok(FemSolution {
                u,
                compatibility: Some(mu),
            })
        }
        FemProblem::Dirichlet => {
            let (interior, slot) = interior_slots(n, &fm.boundary);
            if interior.is_empty() {
                return Ok(FemSolution {
                    u: gfull,
                    compatibility: None,
                });
            }
            let kg = fm.stiffness.mul_vec(&gfull)?;
            let rhs: Vec<f64> = interior.iter().map(|&i| b[i] - kg[i]).collect();
            let kii = restrict(&fm.stiffness, &interior, &slot);
            let ui = SparseLu::new(&kii)?.solve(&rhs)?;
            let mut u = gfull;
            for (&i, x) in interior.iter().zip(ui) {
                u[i] = x;
            }
            Ok(FemSolution { u, compatibility: None })
        }
    }
}

fn interior_slots(n: usize, boundary: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut slot = vec![0usize; n];
    boundary.iter().for_each(|&v| slot[v] = usize::MAX);
    let interior: Vec<usize> = (0..n).filter(|&i| slot[i] != usize::MAX).collect();
    for (s, &i) in interior.iter().enumerate() {
        slot[i] = s;
    }
    (interior, slot)
}

fn restrict(a: &CsrMatrix, keep: &[usize], slot: &[usize]) -> CsrMatrix {
    let rows = keep
        .iter()
        .map(|&i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(|(&j, _)| slot[j] != usize::MAX)
                .map(|(&j, &v)| (slot[j], v))
                .collect()
        })
        .collect();
    CsrMatrix::from_rows(keep.len(), keep.len(), rows)
}

/// Largest vertex count handled by [`fem_eigen`].
pub const FEM_EIGEN_DENSE_LIMIT: usize = 4000;

/// Smallest `count` eigenpairs of the pencil (stiffness, consistent mass),
/// with boundary values eliminated for the Dirichlet problem. Eigenvectors
/// are normalized like the point-cloud eigensolvers (lumped mesh weights).
pub fn fem_eigen(mesh: &SimplicialMesh, problem: FemProblem, count: usize) -> Result<EigenResult> {
    let fm = matrices(mesh)?;
    let n = mesh.vertices.len();
    if n > FEM_EIGEN_DENSE_LIMIT {
        return Err(Error::DenseLimit {
            n,
            limit: FEM_EIGEN_DENSE_LIMIT,
        });
    }
    let (keep, slot) = match problem {
        FemProblem::Neumann => ((0..n).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>()),
        FemProblem::Dirichlet => interior_slots(n, &fm.boundary),
    };
    let q = keep.len();
    if count == 0 || count > q {
        return Err(Error::Config(format!(
            "cannot compute {count} eigenpairs with {q} unknowns"
        )));
    }
    let k = restrict(&fm.stiffness, &keep, &slot).to_dense();
    let m = restrict(&fm.mass, &keep, &slot).to_dense();
    let llt = m
        .llt(Side::Lower)
        .map_err(|_| Error::NotPositiveDefinite("the mass matrix is not positive definite".into()))?;
    let c = llt.L();
    let mut x = k.clone();
    solve_lower_triangular_in_place(c, x.as_mut(), Par::Seq);
    let mut w = x.transpose().to_owned();
    solve_lower_triangular_in_place(c, w.as_mut(), Par::Seq);
    for i in 0..q {
        for j in 0..i {
            let s = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = s;
            w[(j, i)] = s;
        }
    }
    let evd = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut y = Mat::from_fn(q, count, |i, j| evd.U()[(i, j)]);
    solve_upper_triangular_in_place(c.transpose(), y.as_mut(), Par::Seq);
    let (volume, _) = mesh_weights(mesh)?;
    let eigenvectors = (0..count)
        .map(|j| {
            let mut v = vec![0.0; n];
            for (r, &i) in keep.iter().enumerate() {
                v[i] = y[(r, j)];
            }
            normalize_eigenvector(&mut v, &volume);
            v
        })
        .collect();
    Ok(EigenResult {
        eigenvalues: (0..count).map(|j| s[j]).collect(),
        eigenvectors,
        max_imag_part: 0.0,
    })
}

/// The consistent mass matrix, for mass-weighted inner products.
pub fn fem_mass_matrix(mesh: &SimplicialMesh) -> Result<CsrMatrix> {
    Ok(matrices(mesh)?.mass)
}
