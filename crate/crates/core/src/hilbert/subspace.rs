use faer::Mat;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::LinearMap;
use crate::error::{check_dim, Error, Result};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Maximum deviation of `QᵀQ` from the identity accepted for a basis.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// A linear subspace of `ℝ^ambient_dim`, stored as orthonormal basis columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol: f64,
}

impl Subspace {
    /// Wraps basis columns that are already orthonormal.
    pub fn from_orthonormal(basis: DMatrix<f64>, tol: f64) -> Result<Self> {
        if basis.ncols() > basis.nrows() {
            return Err(Error::Construction(format!(
                "{} basis vectors in a {}-dimensional space",
                basis.ncols(),
                basis.nrows()
            )));
        }
        let defect = orthonormality_defect(&basis);
        if defect > ORTHONORMAL_TOL {
            return Err(Error::Construction(format!(
                "basis is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self { basis, tol })
    }

    /// Orthonormal basis of the span of the columns of `vectors`.
    pub fn span(vectors: &DMatrix<f64>, tol: f64) -> Result<Self> {
        range_basis(&LinearMap::new(vectors.clone())?, tol)
    }

    pub fn whole(dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(dim, dim),
            tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(dim, 0),
            tol: DEFAULT_RANK_TOL,
        }
    }

    /// Span of the coordinate directions `indices`, in the given order.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        let mut basis = DMatrix::zeros(ambient_dim, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            if i >= ambient_dim {
                return Err(Error::Input(format!(
                    "coordinate index {i} out of range for dimension {ambient_dim}"
                )));
            }
            basis[(i, col)] = 1.0;
        }
        Self::from_orthonormal(basis, 0.0)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn basis_vector(&self, k: usize) -> DVector<f64> {
        self.basis.column(k).into_owned()
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("Subspace::project", self.ambient_dim(), x.len())?;
        Ok(&self.basis * self.basis.tr_mul(x))
    }

    /// Coordinates of the projection of `x` in this basis.
    pub fn coordinates(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("Subspace::coordinates", self.ambient_dim(), x.len())?;
        Ok(self.basis.tr_mul(x))
    }

    pub fn from_coordinates(&self, coords: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("Subspace::from_coordinates", self.dim(), coords.len())?;
        Ok(&self.basis * coords)
    }

    /// Norm of the component of `x` orthogonal to the subspace.
    pub fn distance(&self, x: &DVector<f64>) -> Result<f64> {
        let p = self.project(x)?;
        Ok((x - p).norm())
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Self {
                basis: DMatrix::identity(n, n),
                tol: self.tol,
            };
        }
        if self.dim() == n {
            return Self {
                basis: DMatrix::zeros(n, 0),
                tol: self.tol,
            };
        }
        // I - QQᵀ has eigenvalues 0 (on the subspace) and 1 (on the complement).
        let projector = DMatrix::identity(n, n) - &self.basis * self.basis.transpose();
        let eig = SymmetricEigen::new(projector);
        let cols: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
        let mut basis = DMatrix::zeros(n, cols.len());
        for (j, &k) in cols.iter().enumerate() {
            basis.set_column(j, &eig.eigenvectors.column(k));
        }
        Self {
            basis,
            tol: self.tol,
        }
    }

    /// Intersection with another subspace of the same ambient space.
    pub fn intersection(&self, other: &Subspace, tol: f64) -> Result<Subspace> {
        check_dim(
            "Subspace::intersection",
            self.ambient_dim(),
            other.ambient_dim(),
        )?;
        let n = self.ambient_dim();
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Subspace::zero(n));
        }
        // x = Qα = Rβ  ⇔  [Q, -R](α; β) = 0
        let stacked = DMatrix::from_fn(n, self.dim() + other.dim(), |i, j| {
            if j < self.dim() {
                self.basis[(i, j)]
            } else {
                -other.basis[(i, j - self.dim())]
            }
        });
        let null = kernel_basis(&LinearMap::new(stacked)?, tol)?;
        if null.dim() == 0 {
            return Ok(Subspace::zero(n));
        }
        let alphas = null.basis.rows(0, self.dim()).into_owned();
        Subspace::span(&(&self.basis * alphas), tol)
    }

    /// Column-per-vector text dump: one ambient coordinate per line, columns
    /// separated by spaces.
    pub fn to_dense_columns(&self) -> String {
        let mut out = format!(
            "% subspace basis: {} rows, {} columns\n",
            self.ambient_dim(),
            self.dim()
        );
        for i in 0..self.ambient_dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| format!("{:.17e}", self.basis[(i, j)]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn orthonormality_defect(basis: &DMatrix<f64>) -> f64 {
    let k = basis.ncols();
    if k == 0 {
        return 0.0;
    }
    let gram = basis.tr_mul(basis) - DMatrix::identity(k, k);
    gram.amax()
}

/// Singular value decomposition shared by the basis builders. The input is
/// zero-padded to a square matrix so that both singular-vector sets are
/// complete; singular vectors belonging to nonzero singular values vanish on
/// the padding.
pub(crate) struct RankRevealing {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Left singular vectors for the nonzero singular values (rows × rank).
    pub left: DMatrix<f64>,
    /// Right singular vectors for the nonzero singular values (cols × rank).
    pub right: DMatrix<f64>,
}

/// Thin SVD `m = U diag(σ) Vᵀ` with `σ` descending.
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok((DMatrix::zeros(rows, 0), Vec::new(), DMatrix::zeros(cols, 0)));
    }
    let fm = Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::Construction(format!("singular value decomposition failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    Ok((
        DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        (0..k).map(|i| s[i]).collect(),
        DMatrix::from_fn(cols, k, |i, j| v[(i, j)]),
    ))
}

pub(crate) fn rank_revealing(m: &DMatrix<f64>, tol: f64) -> Result<RankRevealing> {
    if tol < 0.0 || !tol.is_finite() {
        return Err(Error::Input(format!("rank tolerance must be >= 0, got {tol}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let (rows, cols) = m.shape();
    let k = rows.max(cols);
    if k == 0 || rows == 0 || cols == 0 {
        return Ok(RankRevealing {
            rank: 0,
            singular_values: Vec::new(),
            left: DMatrix::zeros(rows, 0),
            right: DMatrix::zeros(cols, 0),
        });
    }
    let mut padded = DMatrix::zeros(k, k);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let (u, sigma, v) = thin_svd(&padded)?;
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let threshold = tol * sigma_max;
    let rank = if sigma_max == 0.0 {
        0
    } else {
        sigma.iter().take_while(|&&s| s > threshold).count()
    };
    let left = u.view((0, 0), (rows, rank)).into_owned();
    let right = v.view((0, 0), (cols, rank)).into_owned();
    Ok(RankRevealing {
        rank,
        singular_values: sigma[..rank.min(rows.min(cols))].to_vec(),
        left,
        right,
    })
}

/// Orthonormal basis of the null space of `m`. Singular values at or below
/// `tol · σ_max` count as zero.
pub fn kernel_basis(m: &LinearMap, tol: f64) -> Result<Subspace> {
    let rr = rank_revealing(m.matrix(), tol)?;
    let row_space = Subspace {
        basis: rr.right,
        tol,
    };
    Ok(row_space.complement())
}

/// Orthonormal basis of the column space of `m`, with the same rank rule as
/// [`kernel_basis`].
pub fn range_basis(m: &LinearMap, tol: f64) -> Result<Subspace> {
    let rr = rank_revealing(m.matrix(), tol)?;
    Ok(Subspace {
        basis: rr.left,
        tol,
    })
}

/// Orthogonal projection onto `s`.
pub fn project(s: &Subspace, x: &DVector<f64>) -> Result<DVector<f64>> {
    s.project(x)
}
