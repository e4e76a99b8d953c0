use nalgebra::{DMatrix, DVector};

use super::row_and_null_space;
use crate::error::{Error, Result};

/// Solves `B*PMP*B u = f` for `u ∈ N(A)^⊥` by one dense factorization of the
/// reduced matrix `(AV)ᵀ M (AV)`.
pub fn linear_direct_solve(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    f: &DVector<f64>,
) -> Result<DVector<f64>> {
    if m.shape() != (a.nrows(), a.nrows()) || f.len() != a.ncols() {
        return Err(Error::Oracle("shape mismatch between A, M and f".into()));
    }
    let (v, _) = row_and_null_space(a);
    let av = a * &v;
    let k = av.tr_mul(&(m * &av));
    let eta = k
        .lu()
        .solve(&v.tr_mul(f))
        .ok_or_else(|| Error::Oracle("reduced matrix is singular".into()))?;
    Ok(v * eta)
}

/// Neumann problem `C*aA ∋ (u, f)` for a linear relation `a = M` in weak form.
///
/// `embed` spans `D(C)` inside the domain of `A`. With `W = N(A)^⊥ ∩ D(C)` and
/// `Z` its `⟨A·, A·⟩`-orthogonal complement in `N(A)^⊥`, the solution
/// `u ∈ N(A)^⊥` satisfies `⟨MAu, Aw⟩ = ⟨f, w⟩` on `W` and
/// `⟨MAu − u₀, Az⟩ = 0` on `Z`, one square system in the coordinates of `u`.
pub fn neumann_linear_solve(
    a: &DMatrix<f64>,
    embed: &DMatrix<f64>,
    m: &DMatrix<f64>,
    f: &DVector<f64>,
    u0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (rows, cols) = a.shape();
    if embed.nrows() != cols || m.shape() != (rows, rows) || f.len() != cols || u0.len() != rows {
        return Err(Error::Oracle("shape mismatch in the Neumann oracle".into()));
    }
    let (v, _) = row_and_null_space(a);
    let r = v.ncols();
    // W: x = Vα = Eβ  ⇔  [V, −E](α; β) = 0
    let stacked = DMatrix::from_fn(cols, r + embed.ncols(), |i, j| {
        if j < r {
            v[(i, j)]
        } else {
            -embed[(i, j - r)]
        }
    });
    let (_, null) = row_and_null_space(&stacked);
    let w = &v * null.rows(0, r);
    let av = a * &v;
    let aw = a * &w;
    // Z = {Vζ : (Aw)ᵀ(AV)ζ = 0}
    let (_, zeta) = row_and_null_space(&aw.tr_mul(&av));
    let z = &v * zeta;
    let az = a * &z;
    if w.ncols() + z.ncols() != r {
        return Err(Error::Oracle(format!(
            "test space split {} + {} does not match rank {r}",
            w.ncols(),
            z.ncols()
        )));
    }
    let mav = m * &av;
    let mut k = DMatrix::zeros(r, r);
    let mut rhs = DVector::zeros(r);
    k.rows_mut(0, w.ncols()).copy_from(&aw.tr_mul(&mav));
    rhs.rows_mut(0, w.ncols()).copy_from(&w.tr_mul(f));
    k.rows_mut(w.ncols(), z.ncols()).copy_from(&az.tr_mul(&mav));
    rhs.rows_mut(w.ncols(), z.ncols()).copy_from(&az.tr_mul(u0));
    let eta = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Oracle("Neumann weak system is singular".into()))?;
    Ok(v * eta)
}
