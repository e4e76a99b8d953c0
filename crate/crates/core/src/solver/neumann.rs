use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::hilbert::{RestrictedOperator, Subspace};

/// The test space `W = N(A)^⊥ ∩ D(C)` of a Neumann problem and the
/// `⟨A·, A·⟩`-orthogonal projection onto it.
///
/// Everything is expressed in the coordinates of the orthonormal basis `V` of
/// `N(A)^⊥`, where the `H₁(|B|)` inner product has Gram matrix `G = bᵀb`.
pub(crate) struct NeumannReduction {
    /// `Vᵀ` applied to an orthonormal basis of `W`.
    wc: DMatrix<f64>,
    /// `G·wc`
    gwc: DMatrix<f64>,
    /// Cholesky factor of `wcᵀ G wc`.
    gram_w: Option<Cholesky<f64, Dyn>>,
    /// Orthonormal basis of `W` in the ambient space.
    pub w_basis: DMatrix<f64>,
    /// Orthonormal basis of the `H₁(|B|)`-orthogonal complement of `W` in
    /// `N(A)^⊥`, in the ambient space.
    pub complement: DMatrix<f64>,
}

impl NeumannReduction {
    pub fn new(ctx: &RestrictedOperator, inclusion: &Subspace, tol: f64) -> Result<Self> {
        let v = ctx.ran_adj().basis();
        let w = ctx.ran_adj().intersection(inclusion, tol)?;
        let wc = v.tr_mul(w.basis());
        let b = ctx.b_matrix().matrix();
        let g = b.tr_mul(b);
        let gwc = &g * &wc;
        let r = ctx.rank();
        let (gram_w, comp_coords) = if wc.ncols() == 0 {
            (None, Subspace::whole(r))
        } else {
            let chol = Cholesky::new(wc.tr_mul(&gwc)).ok_or_else(|| {
                Error::Construction("Gram matrix of the Neumann test space is singular".into())
            })?;
            (Some(chol), Subspace::span(&gwc, tol)?.complement())
        };
        Ok(Self {
            complement: v * comp_coords.basis(),
            w_basis: w.basis().clone(),
            wc,
            gwc,
            gram_w,
        })
    }

    pub fn w_dim(&self) -> usize {
        self.wc.ncols()
    }

    /// Coordinates of `w ↦ ⟨f, w⟩ − ⟨u₀, Aw⟩` on `N(A)^⊥`.
    pub fn functional(
        ctx: &RestrictedOperator,
        f: &DVector<f64>,
        u0: &DVector<f64>,
    ) -> DVector<f64> {
        let v = ctx.ran_adj().basis();
        let av = ctx.full_map().matrix() * v;
        v.tr_mul(f) - av.tr_mul(u0)
    }

    /// `Qᵀℓ` for the `G`-orthogonal projection `Q` onto `W`: the functional
    /// that agrees with `ℓ` on `W` and vanishes on its complement.
    fn restricted(&self, ell: &DVector<f64>) -> DVector<f64> {
        match &self.gram_w {
            None => DVector::zeros(ell.len()),
            Some(chol) => &self.gwc * chol.solve(&self.wc.tr_mul(ell)),
        }
    }

    /// Euclidean Riesz vector in `N(A)^⊥` of the restricted functional.
    pub fn riesz(&self, ctx: &RestrictedOperator, ell: &DVector<f64>) -> DVector<f64> {
        ctx.ran_adj().basis() * self.restricted(ell)
    }

    /// `sup { |ℓ(w)| : w ∈ W, |Aw| = 1 }`
    pub fn dual_norm(&self, ell: &DVector<f64>) -> f64 {
        match &self.gram_w {
            None => 0.0,
            Some(chol) => {
                let s = self.wc.tr_mul(ell);
                s.dot(&chol.solve(&s)).max(0.0).sqrt()
            }
        }
    }
}
