use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, LU};
use serde::{Deserialize, Serialize};

use super::subspace::{rank_revealing, thin_svd, Subspace};
use super::LinearMap;
use crate::error::{check_dim, Error, Result};

/// `A` viewed as an invertible map from `N(A)^⊥` onto `R(A)`, together with
/// the four fundamental subspaces it was built from.
///
/// `b_matrix` holds the coordinates of that map with respect to the bases of
/// `ran_adj` (domain side) and `ran` (codomain side). Its transpose gives the
/// restricted adjoint `R(A) → N(A)^⊥`.
#[derive(Debug, Clone)]
pub struct RestrictedOperator {
    full_map: LinearMap,
    ker: Subspace,
    coker: Subspace,
    ran: Subspace,
    ran_adj: Subspace,
    b_matrix: LinearMap,
    singular_values: Vec<f64>,
    b_lu: LU<f64, Dyn, Dyn>,
    bt_lu: LU<f64, Dyn, Dyn>,
    gram: Option<Cholesky<f64, Dyn>>,
    tol: f64,
}

/// The norms of the Sobolev chains of `|B|` and `|C| + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevNormKind {
    /// `x ↦ |Ax|` on `N(A)^⊥`.
    H1B,
    /// Plain Euclidean norm.
    H0,
    /// `x ↦ √⟨x, (B*B)⁻¹x⟩` on `N(A)^⊥`.
    Hm1B,
    /// `x ↦ √(|Cx|² + |x|²)`.
    H1CPlusI,
    /// `x ↦ √⟨x, (C*C + 1)⁻¹x⟩`.
    Hm1CPlusI,
}

impl RestrictedOperator {
    pub fn new(map: &LinearMap, tol: f64) -> Result<Self> {
        let rr = rank_revealing(map.matrix(), tol)?;
        let rank = rr.rank;
        let ran = Subspace::from_orthonormal(rr.left, tol)?;
        let ran_adj = Subspace::from_orthonormal(rr.right, tol)?;
        let ker = ran_adj.complement();
        let coker = ran.complement();
        let b = ran.basis().tr_mul(&(map.matrix() * ran_adj.basis()));
        let b_lu = LU::new(b.clone());
        let bt_lu = LU::new(b.transpose());
        let gram = if rank == 0 {
            None
        } else {
            Some(Cholesky::new(b.tr_mul(&b)).ok_or_else(|| {
                Error::Construction("restricted operator Gram matrix is not positive definite".into())
            })?)
        };
        let b_matrix = LinearMap::new(b)?;
        let restricted = Self {
            full_map: map.clone(),
            ker,
            coker,
            ran,
            ran_adj,
            b_matrix,
            singular_values: rr.singular_values,
            b_lu,
            bt_lu,
            gram,
            tol,
        };
        if rank > 0 && restricted.poincare_constant() <= 0.0 {
            return Err(Error::Construction("restricted operator is singular".into()));
        }
        Ok(restricted)
    }

    pub fn full_map(&self) -> &LinearMap {
        &self.full_map
    }

    /// `N(A)`
    pub fn ker(&self) -> &Subspace {
        &self.ker
    }

    /// `N(A*)`
    pub fn coker(&self) -> &Subspace {
        &self.coker
    }

    /// `R(A)`
    pub fn ran(&self) -> &Subspace {
        &self.ran
    }

    /// `R(A*) = N(A)^⊥`
    pub fn ran_adj(&self) -> &Subspace {
        &self.ran_adj
    }

    pub fn b_matrix(&self) -> &LinearMap {
        &self.b_matrix
    }

    pub fn rank(&self) -> usize {
        self.b_matrix.rows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn domain_dim(&self) -> usize {
        self.full_map.cols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.full_map.rows()
    }

    /// Singular values of `A` above the rank threshold, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// σ_min of the restricted operator; `|x| ≤ |Ax| / σ_min` on `N(A)^⊥`.
    /// Zero for the empty operator.
    pub fn poincare_constant(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        thin_svd(self.b_matrix.matrix())
            .map(|(_, s, _)| s.last().copied().unwrap_or(0.0))
            .unwrap_or(0.0)
    }

    fn admissibility_tol(&self, x: &DVector<f64>) -> f64 {
        self.tol.max(64.0 * f64::EPSILON) * x.norm().max(1.0)
    }

    /// Fails unless `x` lies in `N(A)^⊥` up to the operator tolerance.
    pub fn check_in_domain(&self, what: &'static str, x: &DVector<f64>) -> Result<()> {
        check_dim("domain vector", self.domain_dim(), x.len())?;
        let residual = self.ker.project(x)?.norm();
        if residual > self.admissibility_tol(x) {
            return Err(Error::Domain { what, residual });
        }
        Ok(())
    }

    /// Fails unless `y` lies in `R(A)` up to the operator tolerance.
    pub fn check_in_range(&self, what: &'static str, y: &DVector<f64>) -> Result<()> {
        check_dim("range vector", self.codomain_dim(), y.len())?;
        let residual = self.coker.project(y)?.norm();
        if residual > self.admissibility_tol(y) {
            return Err(Error::Domain { what, residual });
        }
        Ok(())
    }

    /// Unique `w ∈ R(A)` with `A*w = f`, for `f ∈ N(A)^⊥`.
    pub fn b_star_inverse(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_in_domain("right-hand side", f)?;
        if self.rank() == 0 {
            return Ok(DVector::zeros(self.codomain_dim()));
        }
        let xi = self.ran_adj.coordinates(f)?;
        let zeta = self
            .bt_lu
            .solve(&xi)
            .ok_or_else(|| Error::Construction("restricted operator is singular".into()))?;
        self.ran.from_coordinates(&zeta)
    }

    /// Unique `u ∈ N(A)^⊥` with `Au = v`, for `v ∈ R(A)`.
    pub fn b_inverse(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_in_range("range element", v)?;
        if self.rank() == 0 {
            return Ok(DVector::zeros(self.domain_dim()));
        }
        let zeta = self.ran.coordinates(v)?;
        let eta = self
            .b_lu
            .solve(&zeta)
            .ok_or_else(|| Error::Construction("restricted operator is singular".into()))?;
        self.ran_adj.from_coordinates(&eta)
    }

    /// `√⟨x, (B*B)⁻¹x⟩`, solved in `N(A)^⊥` coordinates.
    fn hm1_b(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_in_domain("H_-1(|B|) argument", x)?;
        match &self.gram {
            None => Ok(0.0),
            Some(chol) => {
                let xi = self.ran_adj.coordinates(x)?;
                let eta = chol.solve(&xi);
                Ok(xi.dot(&eta).max(0.0).sqrt())
            }
        }
    }

    pub fn sobolev_norm(
        &self,
        kind: SobolevNormKind,
        x: &DVector<f64>,
        c: Option<&LinearMap>,
    ) -> Result<f64> {
        match kind {
            SobolevNormKind::H0 => Ok(x.norm()),
            SobolevNormKind::H1B => {
                self.check_in_domain("H_1(|B|) argument", x)?;
                Ok(self.full_map.apply(x)?.norm())
            }
            SobolevNormKind::Hm1B => self.hm1_b(x),
            SobolevNormKind::H1CPlusI | SobolevNormKind::Hm1CPlusI => {
                let c = c.ok_or_else(|| {
                    Error::Input("the |C|+i norms need the operator C".into())
                })?;
                sobolev_norm_c_plus_i(c, kind, x)
            }
        }
    }

    /// Smallest `L₁` with `√(|Ch|² + |h|²) ≤ L₁ |Ah|` on `N(A)^⊥`, where `c`
    /// acts on the domain of `A`.
    pub fn embedding_constant(&self, c: &LinearMap) -> Result<f64> {
        check_dim("embedding_constant domain", self.domain_dim(), c.cols())?;
        let chol = match &self.gram {
            None => return Ok(0.0),
            Some(chol) => chol,
        };
        let v = self.ran_adj.basis();
        let cv = c.matrix() * v;
        // K = Vᵀ(CᵀC + 1)V, generalized eigenproblem K x = λ (BᵀB) x
        let k = cv.tr_mul(&cv) + v.tr_mul(v);
        let l = chol.l();
        let l_inv_k = l
            .solve_lower_triangular(&k)
            .ok_or_else(|| Error::Construction("singular Cholesky factor".into()))?;
        let s = l
            .solve_lower_triangular(&l_inv_k.transpose())
            .ok_or_else(|| Error::Construction("singular Cholesky factor".into()))?;
        let s = (&s + s.transpose()) * 0.5;
        let lambda_max = SymmetricEigen::new(s)
            .eigenvalues
            .iter()
            .copied()
            .fold(0.0, f64::max);
        Ok(lambda_max.sqrt())
    }
}

/// The `|C| + i` chain norms, which need no kernel information.
pub fn sobolev_norm_c_plus_i(
    c: &LinearMap,
    kind: SobolevNormKind,
    x: &DVector<f64>,
) -> Result<f64> {
    check_dim("|C|+i norm argument", c.cols(), x.len())?;
    match kind {
        SobolevNormKind::H1CPlusI => {
            let cx = c.apply(x)?;
            Ok((cx.norm_squared() + x.norm_squared()).sqrt())
        }
        SobolevNormKind::Hm1CPlusI => {
            let n = c.cols();
            let m = c.matrix().tr_mul(c.matrix()) + DMatrix::identity(n, n);
            let chol = Cholesky::new(m)
                .ok_or_else(|| Error::Construction("C*C + 1 is not positive definite".into()))?;
            Ok(x.dot(&chol.solve(x)).max(0.0).sqrt())
        }
        SobolevNormKind::H0 => Ok(x.norm()),
        other => Err(Error::Input(format!(
            "{other:?} needs a restricted operator"
        ))),
    }
}

/// Builds `B` for `m`; see [`RestrictedOperator`].
pub fn restrict_operator(m: &LinearMap, tol: f64) -> Result<RestrictedOperator> {
    RestrictedOperator::new(m, tol)
}
