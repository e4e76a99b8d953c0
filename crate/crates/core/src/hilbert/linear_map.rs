use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{check_dim, Error, Result};

/// A real matrix with explicit domain (`cols`) and codomain (`rows`)
/// dimensions. Storage is dense; sparse inputs are densified on entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    /// Wraps a dense matrix, rejecting non-finite entries.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if let Some(bad) = matrix.iter().position(|v| !v.is_finite()) {
            let (r, c) = (bad % matrix.nrows(), bad / matrix.nrows());
            return Err(Error::Input(format!("non-finite entry at ({r}, {c})")));
        }
        Ok(Self { matrix })
    }

    /// Row-major construction, mostly for tests and small hand-built maps.
    pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        check_dim("LinearMap::from_rows entry count", rows * cols, entries.len())?;
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_coo(coo: &CooMatrix<f64>) -> Result<Self> {
        let mut dense = DMatrix::zeros(coo.nrows(), coo.ncols());
        for (i, j, v) in coo.triplet_iter() {
            dense[(i, j)] += *v;
        }
        Self::new(dense)
    }

    pub fn from_csr(csr: &CsrMatrix<f64>) -> Result<Self> {
        Self::new(DMatrix::from(csr))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(rows, cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("LinearMap::apply", self.cols(), x.len())?;
        Ok(&self.matrix * x)
    }

    pub fn apply_transpose(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("LinearMap::apply_transpose", self.rows(), y.len())?;
        Ok(self.matrix.tr_mul(y))
    }

    /// The adjoint, which in a real finite-dimensional space is the transpose.
    pub fn transpose(&self) -> LinearMap {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    /// `self * other`
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        check_dim("LinearMap::compose", self.cols(), other.rows())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn scaled(&self, factor: f64) -> LinearMap {
        Self {
            matrix: &self.matrix * factor,
        }
    }

    /// Number of structurally nonzero entries.
    pub fn nnz(&self) -> usize {
        self.matrix.iter().filter(|v| **v != 0.0).count()
    }

    pub fn to_csr(&self) -> CsrMatrix<f64> {
        CsrMatrix::from(&self.to_coo())
    }

    pub fn to_coo(&self) -> CooMatrix<f64> {
        let mut coo = CooMatrix::new(self.rows(), self.cols());
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    coo.push(i, j, v);
                }
            }
        }
        coo
    }
}

impl From<LinearMap> for DMatrix<f64> {
    fn from(map: LinearMap) -> Self {
        map.matrix
    }
}
