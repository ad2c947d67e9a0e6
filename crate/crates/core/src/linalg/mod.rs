//! Sparse storage, Krylov solvers and dense/sparse direct factorizations.

mod csr;
mod krylov;

pub use csr::CsrMatrix;
pub use krylov::{cg, gmres, jacobi, KrylovOutcome};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, MatRef};

use crate::error::{Error, Result};

pub fn col_mat(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn first_col(m: &Mat<f64>) -> Result<Vec<f64>> {
    let v: Vec<f64> = (0..m.nrows()).map(|i| m[(i, 0)]).collect();
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Linalg(
            "direct solve produced non-finite values (singular matrix?)".into(),
        ))
    }
}

/// Dense LU with partial pivoting, factored once and reused.
pub struct DenseLu(faer::linalg::solvers::PartialPivLu<f64>);

impl DenseLu {
    pub fn new(a: MatRef<'_, f64>) -> Self {
        Self(a.partial_piv_lu())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        first_col(&self.0.solve(col_mat(b)))
    }

    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        self.0.solve(b)
    }
}

/// Sparse LU (fill-reducing ordering with partial pivoting).
pub struct SparseLu(faer::sparse::linalg::solvers::Lu<usize, f64>);

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut triplets = Vec::with_capacity(a.nnz());
        for i in 0..a.nrows() {
            let (cols, vals) = a.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| Triplet::new(i, c, v)));
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows(), a.ncols(), &triplets)
            .map_err(|e| Error::Linalg(format!("sparse matrix construction failed: {e:?}")))?;
        let lu = m
            .sp_lu()
            .map_err(|e| Error::Linalg(format!("sparse LU failed: {e:?}")))?;
        Ok(Self(lu))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        first_col(&self.0.solve(col_mat(b)))
    }
}
