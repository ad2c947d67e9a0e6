//! Poisson solvers (Neumann, Dirichlet via boundary penalty, augmented
//! Lagrangian) and generalized eigensolvers on assembled systems.

mod eigen;
mod poisson;

use serde::{Deserialize, Serialize};

pub use eigen::{eigen_dirichlet, eigen_neumann, normalize_eigenvector, EigenOptions, EigenResult};
pub use poisson::{alm_dirichlet, neumann_residual, poisson_dirichlet, poisson_neumann, AlmOptions, AlmState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMethod {
    Cg,
    Gmres,
    DenseLu,
    SparseLu,
}

/// How linear systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Krylov first; direct fallback when it fails.
    Auto,
    Iterative,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    /// Iteration cap; `None` means `10 n`.
    pub max_iter: Option<usize>,
    pub restart: usize,
    pub choice: SolverChoice,
    /// Largest `n` solved with a dense factorization.
    pub dense_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: None,
            restart: 50,
            choice: SolverChoice::Auto,
            dense_limit: 3000,
        }
    }
}

impl SolveOptions {
    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub method: LinearMethod,
    /// Whether the mean-zero constraint was imposed (Neumann problems).
    pub mean_constraint_active: bool,
    /// Lagrange multiplier of the mean-zero constraint: the V-weighted mean
    /// of the right-hand side, i.e. how incompatible the data are.
    pub multiplier: Option<f64>,
}
