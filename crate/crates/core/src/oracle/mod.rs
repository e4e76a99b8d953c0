//! Brute-force reference solvers, written against dense linear algebra only
//! so that they share no code path with the pipelines they check.

mod active_set;
mod convex;
mod linear;

use nalgebra::{DMatrix, SymmetricEigen};

pub use active_set::{active_set_solve, Branch, BranchAssignment, MAX_ENUMERATION_ROWS};
pub use convex::{convex_min_solve, convex_objective, ConvexMinOptions};
pub use linear::{linear_direct_solve, neumann_linear_solve};

/// Orthonormal bases of the row space and the null space of `a`, from the
/// eigen-decomposition of `aᵀa`.
pub(crate) fn row_and_null_space(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.ncols();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(a.tr_mul(a));
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cut = top * 1e-12;
    let keep: Vec<usize> = (0..n).filter(|&i| top > 0.0 && eig.eigenvalues[i] > cut).collect();
    let drop: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    (
        eig.eigenvectors.select_columns(&keep),
        eig.eigenvectors.select_columns(&drop),
    )
}

/// Minimum-norm least-squares solution of `k·x = b` and the residual norm.
pub(crate) fn pinv_solve(
    k: &DMatrix<f64>,
    b: &nalgebra::DVector<f64>,
) -> (nalgebra::DVector<f64>, DMatrix<f64>) {
    let (row, null) = row_and_null_space(k);
    // x = R (KR)⁺ b with R the row space; KR has full column rank
    if row.ncols() == 0 {
        return (nalgebra::DVector::zeros(k.ncols()), null);
    }
    let kr = k * &row;
    let normal = kr.tr_mul(&kr);
    let coeffs = normal
        .cholesky()
        .map(|ch| ch.solve(&kr.tr_mul(b)))
        .unwrap_or_else(|| nalgebra::DVector::zeros(row.ncols()));
    (row * coeffs, null)
}
