use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use super::{LinearMethod, SolveOptions, SolveReport, SolverChoice};
use crate::assembly::PimSystem;
use crate::error::{Error, Result};
use crate::linalg::{cg, gmres, jacobi, CsrMatrix, DenseLu, SparseLu};

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, a)| x * x * a).sum::<f64>().sqrt()
}

fn require_positive_volume(sys: &PimSystem) -> Result<()> {
    match sys.volume().iter().position(|&v| !(v > 0.0)) {
        None => Ok(()),
        Some(i) => Err(Error::InvalidInput(format!("point {i} has zero volume weight"))),
    }
}

/// `b = 2 B g + I f` with `f` on all points and `g` on the boundary sample.
fn neumann_rhs(sys: &PimSystem, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    check_len(sys.n(), f.len())?;
    check_len(sys.m(), g.len())?;
    let mut b = sys.apply_i_unit(f)?;
    if sys.m() > 0 {
        let bg = sys.apply_b_unit(g)?;
        b.iter_mut().zip(&bg).for_each(|(x, y)| *x += 2.0 * y);
    }
    Ok(b)
}

/// Solves `L u = b`, `b = 2 B g + I f`, through the bordered system
/// `[D_V L, V; Vᵀ, 0] [u; μ] = [D_V b; 0]`.
///
/// Eliminating the border gives `μ = Σ V_i b_i / Σ V_i` and the consistent
/// symmetric semidefinite system `D_V L u = D_V (b - μ)`, which is solved by
/// CG; the constant is then fixed by `Σ V_i u_i = 0`.
pub fn poisson_neumann(sys: &PimSystem, f: &[f64], g: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    sys.require_connected()?;
    require_positive_volume(sys)?;
    let b = neumann_rhs(sys, f, g)?;
    let v = sys.volume();
    let n = sys.n();
    let vsum: f64 = v.iter().sum();
    let mu = v.iter().zip(&b).map(|(a, x)| a * x).sum::<f64>() / vsum;
    let rhs: Vec<f64> = v.iter().zip(&b).map(|(a, x)| a * (x - mu)).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        sys.l_unit().mul_vec_into(x, y).expect("square operator");
        y.iter_mut().zip(v).for_each(|(yi, vi)| *yi *= vi);
    };

    let dense = |iterations: usize| -> Result<(Vec<f64>, usize, LinearMethod)> {
        if n > opts.dense_limit {
            return Err(Error::DenseLimit {
                n,
                limit: opts.dense_limit,
            });
        }
        let mut a = faer::Mat::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            let (cols, vals) = sys.l_unit().row(i);
            for (&c, &x) in cols.iter().zip(vals) {
                a[(i, c)] = v[i] * x;
            }
            a[(i, n)] = v[i];
            a[(n, i)] = v[i];
        }
        let mut r = rhs.clone();
        r.push(0.0);
        let mut x = DenseLu::new(a.as_ref()).solve(&r)?;
        x.truncate(n);
        Ok((x, iterations, LinearMethod::DenseLu))
    };

    let (mut u, iterations, method) = match opts.choice {
        SolverChoice::Direct => dense(0)?,
        choice => {
            let out = cg(
                apply,
                &jacobi(
                    &sys.l_unit()
                        .diagonal()
                        .iter()
                        .zip(v)
                        .map(|(d, a)| d * a)
                        .collect::<Vec<_>>(),
                ),
                &rhs,
                None,
                opts.tol,
                opts.cap(n),
            );
            if out.converged {
                (out.x, out.iterations, LinearMethod::Cg)
            } else if choice == SolverChoice::Auto && n <= opts.dense_limit {
                log::warn!(
                    "CG stopped at relative residual {:.3e} after {} iterations; using dense LU",
                    out.relative_residual,
                    out.iterations
                );
                dense(out.iterations)?
            } else {
                return Err(Error::NotConverged {
                    method: "cg",
                    iterations: out.iterations,
                    residual: out.relative_residual,
                });
            }
        }
    };
    let shift = v.iter().zip(&u).map(|(a, x)| a * x).sum::<f64>() / vsum;
    u.iter_mut().for_each(|x| *x -= shift);

    let mut lu = vec![0.0; n];
    apply(&u, &mut lu);
    let rn = norm2(&rhs);
    let relative_residual = if rn == 0.0 {
        norm2(&lu)
    } else {
        lu.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / rn
    };
    Ok(SolveReport {
        u,
        iterations,
        relative_residual,
        method,
        mean_constraint_active: true,
        multiplier: Some(sys.normalizer() * mu),
    })
}

/// `K = L` with `(2/β) B` added into the columns of the boundary points.
fn penalized_operator(sys: &PimSystem, beta: f64) -> CsrMatrix {
    let n = sys.n();
    let s = sys.boundary();
    let c = 2.0 / beta;
    let rows = (0..n)
        .map(|i| {
            let (lc, lv) = sys.l_unit().row(i);
            let (bc, bv) = sys.b_unit().row(i);
            let mut row: Vec<(usize, f64)> = lc.iter().copied().zip(lv.iter().copied()).collect();
            row.extend(bc.iter().zip(bv).map(|(&j, &x)| (s[j], c * x)));
            row
        })
        .collect();
    CsrMatrix::from_rows(n, n, rows)
}

fn check_dirichlet(sys: &PimSystem, beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta must be positive (got {beta})")));
    }
    if sys.m() == 0 {
        return Err(Error::InvalidInput(
            "Dirichlet problems need boundary points (m = 0)".into(),
        ));
    }
    sys.require_connected()
}

enum Direct {
    Dense(DenseLu),
    Sparse(SparseLu),
}

/// The penalized operator with its preconditioner and a lazily built
/// direct factorization, shared by every solve on the same `β`.
pub(super) struct DirichletOperator<'a> {
    pub(super) k: CsrMatrix,
    inv_diag: Vec<f64>,
    opts: &'a SolveOptions,
    direct: OnceCell<Direct>,
}

impl<'a> DirichletOperator<'a> {
    pub(super) fn new(sys: &PimSystem, beta: f64, opts: &'a SolveOptions) -> Result<Self> {
        check_dirichlet(sys, beta)?;
        let k = penalized_operator(sys, beta);
        let inv_diag = jacobi(&k.diagonal());
        Ok(Self {
            k,
            inv_diag,
            opts,
            direct: OnceCell::new(),
        })
    }

    fn direct(&self) -> Result<&Direct> {
        if let Some(d) = self.direct.get() {
            return Ok(d);
        }
        let n = self.k.nrows();
        let d = if n <= self.opts.dense_limit {
            Direct::Dense(DenseLu::new(self.k.to_dense().as_ref()))
        } else {
            Direct::Sparse(SparseLu::new(&self.k)?)
        };
        Ok(self.direct.get_or_init(|| d))
    }

    fn solve_direct(&self, rhs: &[f64]) -> Result<(Vec<f64>, LinearMethod)> {
        match self.direct()? {
            Direct::Dense(lu) => Ok((lu.solve(rhs)?, LinearMethod::DenseLu)),
            Direct::Sparse(lu) => Ok((lu.solve(rhs)?, LinearMethod::SparseLu)),
        }
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let kx = self.k.mul_vec(x).expect("square operator");
        let rn = norm2(rhs);
        let r = kx.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if rn == 0.0 {
            r
        } else {
            r / rn
        }
    }

    pub(super) fn solve(&self, rhs: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, usize, f64, LinearMethod)> {
        let n = self.k.nrows();
        if self.opts.choice == SolverChoice::Direct {
            let (x, m) = self.solve_direct(rhs)?;
            let r = self.residual(&x, rhs);
            return Ok((x, 0, r, m));
        }
        let out = gmres(
            |x, y| self.k.mul_vec_into(x, y).expect("square operator"),
            &self.inv_diag,
            rhs,
            x0,
            self.opts.restart,
            self.opts.tol,
            self.opts.cap(n),
        );
        if out.converged {
            return Ok((out.x, out.iterations, out.relative_residual, LinearMethod::Gmres));
        }
        if self.opts.choice == SolverChoice::Auto {
            log::warn!(
                "GMRES stopped at relative residual {:.3e} after {} iterations; using a direct solve",
                out.relative_residual,
                out.iterations
            );
            let (x, m) = self.solve_direct(rhs)?;
            let r = self.residual(&x, rhs);
            return Ok((x, out.iterations, r, m));
        }
        Err(Error::NotConverged {
            method: "gmres",
            iterations: out.iterations,
            residual: out.relative_residual,
        })
    }
}

/// `b = I f + 2 B (g / β + w)`; with `w = 0` this is `(2/β) B g + I f`.
fn dirichlet_rhs(sys: &PimSystem, i_f: &[f64], g: &[f64], beta: f64, w: &[f64]) -> Result<Vec<f64>> {
    let q: Vec<f64> = g.iter().zip(w).map(|(gj, wj)| gj / beta + wj).collect();
    let bq = sys.apply_b_unit(&q)?;
    Ok(i_f.iter().zip(&bq).map(|(a, b)| a + 2.0 * b).collect())
}

/// Penalty (Robin) approximation of the Dirichlet problem:
/// `K u = (2/β) B g + I f`.
pub fn poisson_dirichlet(sys: &PimSystem, f: &[f64], g: &[f64], beta: f64, opts: &SolveOptions) -> Result<SolveReport> {
    check_len(sys.n(), f.len())?;
    check_len(sys.m(), g.len())?;
    let op = DirichletOperator::new(sys, beta, opts)?;
    let i_f = sys.apply_i_unit(f)?;
    let rhs = dirichlet_rhs(sys, &i_f, g, beta, &vec![0.0; sys.m()])?;
    let (u, iterations, relative_residual, method) = op.solve(&rhs, None)?;
    Ok(SolveReport {
        u,
        iterations,
        relative_residual,
        method,
        mean_constraint_active: false,
        multiplier: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmOptions {
    pub max_iter: usize,
    /// Stop when `‖g - u|_S‖_A <= tol · ‖g‖_A`.
    pub tol: f64,
}

impl Default for AlmOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmState {
    /// Multiplier on the boundary sample.
    pub w: Vec<f64>,
    pub beta: f64,
    /// `‖g - u|_S‖_A / ‖g‖_A` after every iteration (absolute when `g = 0`).
    pub boundary_residual_history: Vec<f64>,
}

/// Augmented Lagrangian iteration: repeatedly solves
/// `K u = I f + 2 B (g/β + w)` and updates `w ← w + (g - u|_S)/β`.
pub fn alm_dirichlet(
    sys: &PimSystem,
    f: &[f64],
    g: &[f64],
    beta: f64,
    alm: &AlmOptions,
    opts: &SolveOptions,
) -> Result<(SolveReport, AlmState)> {
    check_len(sys.n(), f.len())?;
    check_len(sys.m(), g.len())?;
    if alm.max_iter == 0 {
        return Err(Error::Config("ALM needs at least one iteration".into()));
    }
    let op = DirichletOperator::new(sys, beta, opts)?;
    let i_f = sys.apply_i_unit(f)?;
    let a = sys.boundary_weights();
    let gnorm = weighted_norm(g, a);
    let s = sys.boundary();
    let mut state = AlmState {
        w: vec![0.0; sys.m()],
        beta,
        boundary_residual_history: Vec::with_capacity(alm.max_iter),
    };
    let mut best = f64::INFINITY;
    let mut total_iterations = 0;
    let mut last: Option<(Vec<f64>, f64, LinearMethod)> = None;
    for it in 0..alm.max_iter {
        let rhs = dirichlet_rhs(sys, &i_f, g, beta, &state.w)?;
        let x0 = last.as_ref().map(|l| l.0.as_slice());
        let (u, iters, rel, method) = op.solve(&rhs, x0)?;
        total_iterations += iters;
        let gap: Vec<f64> = g.iter().zip(s).map(|(gj, &sj)| gj - u[sj]).collect();
        let res_abs = weighted_norm(&gap, a);
        let res = if gnorm > 0.0 { res_abs / gnorm } else { res_abs };
        state.boundary_residual_history.push(res);
        if !res.is_finite() || res > 10.0 * best {
            return Err(Error::AlmDiverged {
                beta,
                iteration: it,
                residual: res,
            });
        }
        best = best.min(res);
        state.w.iter_mut().zip(&gap).for_each(|(w, d)| *w += d / beta);
        last = Some((u, rel, method));
        if res_abs <= alm.tol * gnorm {
            break;
        }
    }
    let (u, relative_residual, method) = last.expect("at least one iteration");
    Ok((
        SolveReport {
            u,
            iterations: total_iterations,
            relative_residual,
            method,
            mean_constraint_active: false,
            multiplier: None,
        },
        state,
    ))
}

/// `‖L u - 2 B g - I f‖` in the V-weighted L2 norm: how well `u` satisfies
/// the discrete Neumann equation.
pub fn neumann_residual(sys: &PimSystem, u: &[f64], f: &[f64], g: &[f64]) -> Result<f64> {
    let b = neumann_rhs(sys, f, g)?;
    let lu = sys.apply_l_unit(u)?;
    let r: Vec<f64> = lu.iter().zip(&b).map(|(a, b)| a - b).collect();
    Ok(sys.normalizer() * weighted_norm(&r, sys.volume()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::geometry::{generate_disk_mesh, mesh_to_cloud, PointCloud};
    use crate::kernel::KernelSpec;
    use crate::weights::average_neighbor_distance;

    fn disk(rings: usize) -> PointCloud {
        mesh_to_cloud(&generate_disk_mesh(rings).unwrap()).unwrap()
    }

    fn system(cloud: &PointCloud, factor: f64) -> PimSystem {
        let delta = average_neighbor_distance(cloud.points(), 2, 10).unwrap();
        assemble(cloud, &KernelSpec::gaussian((factor * delta).powi(2)).unwrap()).unwrap()
    }

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        num / norm2(b).max(1e-300)
    }

    #[test]
    fn neumann_zero_data_gives_zero() {
        let sys = system(&disk(6), 0.5);
        let r = poisson_neumann(&sys, &vec![0.0; sys.n()], &vec![0.0; sys.m()], &SolveOptions::default()).unwrap();
        assert!(r.u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn neumann_mean_zero_and_dense_agrees() {
        let cloud = disk(8);
        let sys = system(&cloud, 0.5);
        let f: Vec<f64> = cloud.points().iter().map(|p| p[0] + 0.3 * p[1] * p[1] + 0.2).collect();
        let g = vec![0.1; sys.m()];
        let it = poisson_neumann(&sys, &f, &g, &SolveOptions::default()).unwrap();
        assert_eq!(it.method, LinearMethod::Cg);
        assert!(it.relative_residual <= 1e-9);
        let mean: f64 = it.u.iter().zip(sys.volume()).map(|(u, v)| u * v).sum();
        assert!(mean.abs() <= 1e-10 * norm2(&it.u));
        let dense = poisson_neumann(
            &sys,
            &f,
            &g,
            &SolveOptions {
                choice: SolverChoice::Direct,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(dense.method, LinearMethod::DenseLu);
        assert!(rel_diff(&it.u, &dense.u) < 1e-8, "{}", rel_diff(&it.u, &dense.u));
        assert!((it.multiplier.unwrap() - dense.multiplier.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_iterative_and_direct_agree() {
        let cloud = disk(8);
        let sys = system(&cloud, 0.75);
        let f: Vec<f64> = cloud.points().iter().map(|p| 1.0 + p[0]).collect();
        let g = vec![1.0; sys.m()];
        // β = 1e-4 makes K stiff; a tight residual is needed for 1e-8 accuracy in u.
        let tight = SolveOptions {
            tol: 1e-13,
            ..SolveOptions::default()
        };
        let it = poisson_dirichlet(&sys, &f, &g, 1e-4, &tight).unwrap();
        assert_eq!(it.method, LinearMethod::Gmres);
        let direct = poisson_dirichlet(
            &sys,
            &f,
            &g,
            1e-4,
            &SolveOptions {
                choice: SolverChoice::Direct,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!(rel_diff(&it.u, &direct.u) < 1e-8, "{}", rel_diff(&it.u, &direct.u));
    }

    #[test]
    fn constant_boundary_data_reproduces_constant() {
        let cloud = disk(10);
        let sys = system(&cloud, 0.75);
        let beta = 1e-4;
        let r = poisson_dirichlet(
            &sys,
            &vec![0.0; sys.n()],
            &vec![1.0; sys.m()],
            beta,
            &SolveOptions::default(),
        )
        .unwrap();
        // L 1 = 0, so u = 1 solves K u = (2/β) B 1 exactly.
        for u in &r.u {
            assert!((u - 1.0).abs() < 1e-6, "{u}");
        }
    }

    #[test]
    fn dirichlet_rejects_bad_beta_and_closed_clouds() {
        let sys = system(&disk(5), 0.75);
        let f = vec![0.0; sys.n()];
        let g = vec![0.0; sys.m()];
        assert!(matches!(
            poisson_dirichlet(&sys, &f, &g, 0.0, &SolveOptions::default()),
            Err(Error::Config(_))
        ));
        let cloud = PointCloud::new(2, 2, disk(5).points().to_vec(), vec![])
            .unwrap()
            .with_weights(sys.volume().to_vec(), vec![])
            .unwrap();
        let closed = assemble(&cloud, sys.kernel()).unwrap();
        assert!(poisson_dirichlet(&closed, &f, &[], 1e-4, &SolveOptions::default()).is_err());
    }

    #[test]
    fn single_alm_step_equals_penalty_solve() {
        let cloud = disk(8);
        let sys = system(&cloud, 0.75);
        let f: Vec<f64> = cloud.points().iter().map(|p| p[1].sin()).collect();
        let g: Vec<f64> = cloud.boundary_points().iter().map(|p| p[0]).collect();
        let opts = SolveOptions::default();
        let direct = poisson_dirichlet(&sys, &f, &g, 0.5, &opts).unwrap();
        let (alm, state) = alm_dirichlet(&sys, &f, &g, 0.5, &AlmOptions { max_iter: 1, tol: 0.0 }, &opts).unwrap();
        assert_eq!(alm.u, direct.u);
        assert_eq!(state.boundary_residual_history.len(), 1);
    }

    #[test]
    fn alm_drives_boundary_residual_down() {
        let cloud = disk(8);
        let sys = system(&cloud, 0.75);
        let f = vec![0.0; sys.n()];
        let g: Vec<f64> = cloud.boundary_points().iter().map(|p| 1.0 + p[0]).collect();
        let (_, state) = alm_dirichlet(
            &sys,
            &f,
            &g,
            1.0,
            &AlmOptions {
                max_iter: 40,
                tol: 1e-8,
            },
            &SolveOptions::default(),
        )
        .unwrap();
        let h = &state.boundary_residual_history;
        assert!(h.last().unwrap() < &(0.1 * h[0]), "{h:?}");
    }

    #[test]
    fn residual_of_constant_vanishes() {
        let sys = system(&disk(6), 0.5);
        let r = neumann_residual(&sys, &vec![3.0; sys.n()], &vec![0.0; sys.n()], &vec![0.0; sys.m()]).unwrap();
        assert!(r < 1e-10);
    }
}
