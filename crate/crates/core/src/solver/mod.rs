//! Solution pipelines for `A*aA ∋ (u, f)` and its Dirichlet and Neumann
//! variants, plus verifiers for the continuity estimates.

mod estimates;
mod neumann;
mod pipelines;

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{LinearMap, Subspace, DEFAULT_RANK_TOL};
use crate::relations::{GraphPoint, Relation, SplittingOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub use estimates::{
    lipschitz_probe, verify_dirichlet_estimate, verify_neumann_estimate, EstimateReport,
    LipschitzReport,
};
pub use pipelines::{solve, solve_dirichlet, solve_homogeneous, solve_neumann};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Homogeneous,
    Dirichlet,
    Neumann,
}

/// What to do with a right-hand side that has a component in `N(A)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRhsPolicy {
    /// Fail with a domain error.
    #[default]
    Reject,
    /// Only the action of `f` on `N(A)^⊥` is used.
    Accept,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stopping tolerance of the splitting iteration; residuals up to
    /// `10·tol` are accepted.
    pub tol: f64,
    /// Relative singular value threshold for ranks and kernels.
    pub rank_tol: f64,
    pub lambda: Option<f64>,
    pub max_iter: usize,
    pub start: Option<DVector<f64>>,
    pub kernel_rhs: KernelRhsPolicy,
    /// Solve the projected problem of an affine relation by one dense
    /// factorization instead of iterating.
    pub linear_fast_path: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            lambda: None,
            max_iter: DEFAULT_MAX_ITER,
            start: None,
            kernel_rhs: KernelRhsPolicy::Reject,
            linear_fast_path: true,
        }
    }
}

impl SolverOptions {
    pub(crate) fn splitting(&self) -> SplittingOptions {
        SplittingOptions {
            lambda: self.lambda,
            tol: self.tol,
            max_iter: self.max_iter,
            start: self.start.clone(),
        }
    }
}

/// One boundary value problem.
///
/// For `Dirichlet` the pair satisfies `A ⊆ C`: `A` acts on the interior
/// unknowns, `C` on all unknowns, and `inclusion` is the subspace of `C`'s
/// domain that carries `A`'s domain, so that `C·E = A` for its basis `E`.
/// For `Neumann` the roles swap (`C ⊆ A`) and `inclusion` lives in `A`'s
/// domain.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kind: ProblemKind,
    pub a_map: LinearMap,
    pub c_map: Option<LinearMap>,
    pub inclusion: Option<Subspace>,
    pub relation: Relation,
    pub f: DVector<f64>,
    pub u0: Option<DVector<f64>>,
    pub options: SolverOptions,
}

impl Problem {
    pub fn homogeneous(a_map: LinearMap, relation: Relation, f: DVector<f64>) -> Self {
        Self {
            kind: ProblemKind::Homogeneous,
            a_map,
            c_map: None,
            inclusion: None,
            relation,
            f,
            u0: None,
            options: SolverOptions::default(),
        }
    }

    pub fn dirichlet(
        a_map: LinearMap,
        c_map: LinearMap,
        inclusion: Subspace,
        relation: Relation,
        f: DVector<f64>,
        u0: DVector<f64>,
    ) -> Self {
        Self {
            kind: ProblemKind::Dirichlet,
            a_map,
            c_map: Some(c_map),
            inclusion: Some(inclusion),
            relation,
            f,
            u0: Some(u0),
            options: SolverOptions::default(),
        }
    }

    pub fn neumann(
        a_map: LinearMap,
        c_map: LinearMap,
        inclusion: Subspace,
        relation: Relation,
        f: DVector<f64>,
        u0: Option<DVector<f64>>,
    ) -> Self {
        Self {
            kind: ProblemKind::Neumann,
            a_map,
            c_map: Some(c_map),
            inclusion: Some(inclusion),
            relation,
            f,
            u0,
            options: SolverOptions::default(),
        }
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    /// Boundary data, defaulting to zero where the problem allows it.
    pub fn boundary_data(&self) -> Result<DVector<f64>> {
        match (self.kind, &self.u0) {
            (_, Some(u0)) => Ok(u0.clone()),
            (ProblemKind::Neumann, None) => Ok(DVector::zeros(self.a_map.rows())),
            (ProblemKind::Dirichlet, None) => {
                Err(Error::Input("a Dirichlet problem needs boundary data u0".into()))
            }
            (ProblemKind::Homogeneous, None) => Ok(DVector::zeros(0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.a_map;
        check_dim("relation dimension", a.rows(), self.relation.dim())?;
        check_dim("right-hand side", a.cols(), self.f.len())?;
        if self.f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("right-hand side has non-finite entries".into()));
        }
        if !(self.options.tol > 0.0 && self.options.tol.is_finite()) {
            return Err(Error::Input(format!("tolerance must be positive, got {}", self.options.tol)));
        }
        if self.kind == ProblemKind::Homogeneous {
            return Ok(());
        }
        let c = self
            .c_map
            .as_ref()
            .ok_or_else(|| Error::Input(format!("{:?} problem needs a second operator", self.kind)))?;
        let incl = self
            .inclusion
            .as_ref()
            .ok_or_else(|| Error::Input(format!("{:?} problem needs an inclusion subspace", self.kind)))?;
        check_dim("operator pair codomain", a.rows(), c.rows())?;
        let u0 = self.boundary_data()?;
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("boundary data has non-finite entries".into()));
        }
        let (small, big) = match self.kind {
            ProblemKind::Dirichlet => {
                check_dim("boundary data", c.cols(), u0.len())?;
                (a, c)
            }
            _ => {
                check_dim("boundary data", a.rows(), u0.len())?;
                (c, a)
            }
        };
        check_dim("inclusion ambient dimension", big.cols(), incl.ambient_dim())?;
        check_dim("inclusion dimension", small.cols(), incl.dim())?;
        let restricted = big.matrix() * incl.basis();
        let scale = small.matrix().amax().max(1.0);
        let mismatch = (&restricted - small.matrix()).amax();
        if mismatch > 1e-10 * scale {
            return Err(Error::Input(format!(
                "operator inclusion violated: |C·E − A|_max = {mismatch:.3e}"
            )));
        }
        Ok(())
    }
}

/// Named a-posteriori residuals and a-priori norms of a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Quantities that vanish for an exact solution.
    pub residuals: BTreeMap<String, f64>,
    /// Norms and reported quantities with no sign of correctness attached.
    pub norms: BTreeMap<String, f64>,
    pub iterations: usize,
}

impl Diagnostics {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }

    pub(crate) fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    pub(crate) fn norm(&mut self, name: &str, value: f64) {
        self.norms.insert(name.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub kind: ProblemKind,
    pub u: DVector<f64>,
    /// `(Au, v)` or `(Cu, v)` in the graph of the relation.
    pub certificate: GraphPoint,
    /// `w ∈ R(A)` with `A*w = f` (homogeneous and Dirichlet problems) or the
    /// flux `v` (Neumann problems).
    pub w: DVector<f64>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    /// True when every residual is within `10·tol`.
    pub fn is_certified(&self, tol: f64) -> bool {
        self.diagnostics.max_residual() <= 10.0 * tol
    }
}
