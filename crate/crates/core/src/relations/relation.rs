use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU};

use super::ScalarGraph;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::LinearMap;

/// Caller-supplied resolvent `(μ, z) ↦ J_μ(b)(z)` of a maximal monotone `b`.
type ResolventFn = dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync;

#[derive(Clone)]
pub struct CustomResolvent(Arc<ResolventFn>);

impl CustomResolvent {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for CustomResolvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomResolvent(..)")
    }
}

/// How the base part `b = a − c` is given.
#[derive(Debug, Clone)]
pub enum Descriptor {
    /// `a = M` with positive definite symmetric part; `b = M − c`.
    LinearPD(DMatrix<f64>),
    /// `a(x)_i = c·x_i + β_i(x_i)`.
    DiagonalGraph(Vec<ScalarGraph>),
    Custom(CustomResolvent),
}

#[derive(Debug, Clone, PartialEq)]
struct Offset {
    p: DVector<f64>,
    q: DVector<f64>,
}

/// A `c`-maximal monotone relation on `ℝ^dim` with full domain.
///
/// Only the resolvent of `b = a − c` is stored; every other operation is
/// resolvent algebra. A shift `a − (p, q)` is kept as an offset on top of the
/// descriptor and folded into each evaluation.
#[derive(Debug, Clone)]
pub struct Relation {
    dim: usize,
    c: f64,
    descriptor: Descriptor,
    offset: Option<Offset>,
}

/// Base resolvent with any per-`μ` factorization done up front.
pub struct PreparedResolvent<'a> {
    relation: &'a Relation,
    mu: f64,
    lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl PreparedResolvent<'_> {
    /// `J_μ(b)(z)` for the (possibly shifted) base part.
    pub fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let rel = self.relation;
        match &rel.offset {
            None => self.eval_unshifted(z),
            Some(Offset { p, q }) => {
                let arg = z + p + (q - p * rel.c) * self.mu;
                self.eval_unshifted(&arg) - p
            }
        }
    }

    fn eval_unshifted(&self, z: &DVector<f64>) -> DVector<f64> {
        match &self.relation.descriptor {
            Descriptor::LinearPD(_) => self
                .lu
                .as_ref()
                .and_then(|lu| lu.solve(z))
                .expect("I + μ(M − c) is invertible for monotone M − c"),
            Descriptor::DiagonalGraph(graphs) => {
                DVector::from_iterator(z.len(), graphs.iter().zip(z.iter()).map(|(g, &zi)| g.resolvent(self.mu, zi)))
            }
            Descriptor::Custom(f) => (f.0)(self.mu, z),
        }
    }
}

impl Relation {
    /// `a = M`, with `c = λ_min((M + Mᵀ)/2)` required to exceed `tol`.
    pub fn linear(m: &LinearMap, tol: f64) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::Construction(format!(
                "linear relation needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let c = symmetric_part_min_eigenvalue(m.matrix());
        if c.is_nan() || c <= tol {
            return Err(Error::Construction(format!(
                "symmetric part is not positive definite (λ_min = {c:.3e})"
            )));
        }
        Ok(Self {
            dim: m.rows(),
            c,
            descriptor: Descriptor::LinearPD(m.matrix().clone()),
            offset: None,
        })
    }

    /// `a(x)_i = c·x_i + β_i(x_i)`.
    pub fn diagonal(c: f64, graphs: Vec<ScalarGraph>) -> Result<Self> {
        check_c(c)?;
        for g in &graphs {
            g.validate()?;
        }
        Ok(Self {
            dim: graphs.len(),
            c,
            descriptor: Descriptor::DiagonalGraph(graphs),
            offset: None,
        })
    }

    /// `a = c·id`.
    pub fn scaled_identity(dim: usize, c: f64) -> Result<Self> {
        Self::diagonal(c, vec![ScalarGraph::Linear { slope: 0.0 }; dim])
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0).expect("c = 1 is valid")
    }

    /// A relation known only through the resolvent of its monotone base part.
    /// The closure must be total and nonexpansive for every `μ > 0`.
    pub fn custom(dim: usize, c: f64, base_resolvent: CustomResolvent) -> Result<Self> {
        check_c(c)?;
        Ok(Self {
            dim,
            c,
            descriptor: Descriptor::Custom(base_resolvent),
            offset: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strong monotonicity constant.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn is_shifted(&self) -> bool {
        self.offset.is_some()
    }

    /// `(p, q)` such that this relation is `a₀ − (p, q)` for the unshifted
    /// descriptor relation `a₀`.
    pub fn offset(&self) -> Option<(&DVector<f64>, &DVector<f64>)> {
        self.offset.as_ref().map(|o| (&o.p, &o.q))
    }

    /// Matrix `M` with `a(x) = Mx + const` when the relation is affine.
    pub fn linear_part(&self) -> Option<DMatrix<f64>> {
        match &self.descriptor {
            Descriptor::LinearPD(m) => Some(m.clone()),
            Descriptor::DiagonalGraph(graphs) => {
                let mut diag = Vec::with_capacity(graphs.len());
                for g in graphs {
                    match g {
                        ScalarGraph::Linear { slope } => diag.push(self.c + slope),
                        _ => return None,
                    }
                }
                Some(DMatrix::from_diagonal(&DVector::from_vec(diag)))
            }
            Descriptor::Custom(_) => None,
        }
    }

    /// Per-coordinate graphs for diagonal relations.
    pub fn graphs(&self) -> Option<&[ScalarGraph]> {
        match &self.descriptor {
            Descriptor::DiagonalGraph(g) => Some(g),
            _ => None,
        }
    }

    pub fn prepare_base(&self, mu: f64) -> PreparedResolvent<'_> {
        let lu = match &self.descriptor {
            Descriptor::LinearPD(m) => {
                let n = self.dim;
                let shifted = DMatrix::identity(n, n) + (m - DMatrix::identity(n, n) * self.c) * mu;
                Some(LU::new(shifted))
            }
            _ => None,
        };
        PreparedResolvent {
            relation: self,
            mu,
            lu,
        }
    }

    /// `J_μ(a − c)(z)`.
    pub fn base_resolvent(&self, mu: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("Relation::base_resolvent", self.dim, z.len())?;
        check_positive("μ", mu)?;
        Ok(self.prepare_base(mu).eval(z))
    }

    /// Evaluator for `J_λ(a)` with the factorization reused across calls.
    pub fn prepare_resolvent(&self, lambda: f64) -> Result<PreparedResolvent<'_>> {
        check_positive("λ", lambda)?;
        Ok(self.prepare_base(lambda / (1.0 + lambda * self.c)))
    }

    /// `J_λ(a)(z) = (1 + λa)⁻¹(z)`.
    pub fn resolvent(&self, lambda: f64, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("Relation::resolvent", self.dim, z.len())?;
        let prepared = self.prepare_resolvent(lambda)?;
        Ok(prepared.eval(&(z / (1.0 + lambda * self.c))))
    }

    /// The unique `x` with `y ∈ a(x)`, in one resolvent evaluation.
    pub fn inverse(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("Relation::inverse", self.dim, y.len())?;
        Ok(self.prepare_base(1.0 / self.c).eval(&(y / self.c)))
    }

    /// `a − (p, q) = {(x − p, y − q) : (x, y) ∈ a}`.
    pub fn shift(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<Relation> {
        check_dim("Relation::shift p", self.dim, p.len())?;
        check_dim("Relation::shift q", self.dim, q.len())?;
        let offset = match &self.offset {
            None => Offset {
                p: p.clone(),
                q: q.clone(),
            },
            Some(o) => Offset {
                p: &o.p + p,
                q: &o.q + q,
            },
        };
        Ok(Relation {
            dim: self.dim,
            c: self.c,
            descriptor: self.descriptor.clone(),
            offset: Some(offset),
        })
    }

    /// `|x − J_{1/c}(a)(x + y/c)|`; zero exactly when `(x, y) ∈ a`.
    pub fn graph_residual(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        check_dim("Relation::graph_residual x", self.dim, x.len())?;
        check_dim("Relation::graph_residual y", self.dim, y.len())?;
        let lambda = 1.0 / self.c;
        let j = self.resolvent(lambda, &(x + y * lambda))?;
        Ok((x - j).norm())
    }
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::Construction(format!(
            "monotonicity constant must be positive, got {c}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be positive, got {v}")))
    }
}

pub fn symmetric_part_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Builds the linear relation `a = M`.
pub fn make_linear(m: &LinearMap, tol: f64) -> Result<Relation> {
    Relation::linear(m, tol)
}

/// Builds `a(x)_i = c·x_i + β_i(x_i)`.
pub fn make_diagonal(c: f64, graphs: Vec<ScalarGraph>) -> Result<Relation> {
    Relation::diagonal(c, graphs)
}
