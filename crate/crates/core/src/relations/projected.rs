use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Relation;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::Subspace;
use crate::random::{gaussian_vector, seeded};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// A pair `(x, y)` with its distance from the graph of a relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub residual: f64,
}

impl GraphPoint {
    pub fn new(a: &Relation, x: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        let residual = a.graph_residual(&x, &y)?;
        Ok(Self { x, y, residual })
    }
}

/// Knobs of the Douglas–Rachford iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingOptions {
    /// Step size; `None` means `1/c`.
    pub lambda: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Initial governing sequence element; `None` starts from `w`.
    pub start: Option<DVector<f64>>,
}

impl Default for SplittingOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSolution {
    /// `(x, v)` with `x ∈ U`, `v ∈ a(x)` and `Pv = w`.
    pub point: GraphPoint,
    pub iterations: usize,
    /// `|z_k − x_k|` at termination.
    pub step_residual: f64,
}

/// Solves `w ∈ P a(x)`, `x ∈ U`, for the orthogonal projection `P` onto `U`.
///
/// Douglas–Rachford on `0 ∈ (a − (0, w))(x) + N_U(x)`, whose normal-cone
/// resolvent is `P` itself:
///
/// ```text
/// x_k     = P s_k
/// z_k     = J_λ(a − (0, w))(2x_k − s_k)
/// s_{k+1} = s_k + z_k − x_k
/// ```
///
/// At a fixed point `(x − s)/λ ∈ (a − (0, w))(x)` and `s − x ⊥ U`, so the
/// returned certificate is `v = w + (x − s)/λ`, which satisfies `Pv = w`
/// exactly.
pub fn projected_inverse(
    a: &Relation,
    u: &Subspace,
    w: &DVector<f64>,
    opts: &SplittingOptions,
) -> Result<ProjectedSolution> {
    check_dim("projected_inverse subspace", a.dim(), u.ambient_dim())?;
    check_dim("projected_inverse w", a.dim(), w.len())?;
    let off = u.distance(w)?;
    if off > opts.tol.max(64.0 * f64::EPSILON) * w.norm().max(1.0) {
        return Err(Error::Domain {
            what: "projected target",
            residual: off,
        });
    }
    let lambda = opts.lambda.unwrap_or(1.0 / a.c());
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Input(format!("step size must be positive, got {lambda}")));
    }

    if u.dim() == u.ambient_dim() {
        let x = a.inverse(w)?;
        let point = GraphPoint::new(a, x, w.clone())?;
        return Ok(ProjectedSolution {
            point,
            iterations: 0,
            step_residual: 0.0,
        });
    }

    let shifted = a.shift(&DVector::zeros(a.dim()), w)?;
    let resolvent = shifted.prepare_resolvent(lambda)?;
    let scale = 1.0 / (1.0 + lambda * a.c());
    let mut s = match &opts.start {
        Some(s0) => {
            check_dim("projected_inverse start", a.dim(), s0.len())?;
            s0.clone()
        }
        None => w.clone(),
    };
    let mut residual = f64::INFINITY;
    for k in 0..opts.max_iter {
        let x = u.project(&s)?;
        let reflected = &x * 2.0 - &s;
        let z = resolvent.eval(&(reflected * scale));
        residual = (&z - &x).norm();
        if residual <= opts.tol {
            let v = w + (&x - &s) / lambda;
            let point = GraphPoint::new(a, x, v)?;
            return Ok(ProjectedSolution {
                point,
                iterations: k + 1,
                step_residual: residual,
            });
        }
        s += z - x;
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Outcome of sampling the strong monotonicity inequality
/// `⟨x₁ − x₂, y₁ − y₂⟩ ≥ c|x₁ − x₂|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub c: f64,
    /// Smallest `⟨Δx, Δy⟩ / |Δx|²` over pairs with `Δx ≠ 0`; `None` if every
    /// pair collapsed to the same preimage.
    pub min_quotient: Option<f64>,
    pub violations: usize,
    pub pass: bool,
}

/// Samples pairs on the graph through [`Relation::inverse`] at random outputs.
pub fn monotonicity_probe(a: &Relation, trials: usize, seed: u64) -> Result<MonotonicityReport> {
    if trials == 0 {
        return Err(Error::Input("monotonicity probe needs at least one trial".into()));
    }
    let mut rng = seeded(seed);
    let n = a.dim();
    let mut min_quotient: Option<f64> = None;
    let mut violations = 0;
    for _ in 0..trials {
        let y1 = gaussian_vector(&mut rng, n) * 3.0;
        let y2 = gaussian_vector(&mut rng, n) * 3.0;
        let x1 = a.inverse(&y1)?;
        let x2 = a.inverse(&y2)?;
        let dx = &x1 - &x2;
        let pairing = dx.dot(&(&y1 - &y2));
        let sq = dx.norm_squared();
        if pairing < a.c() * sq - 1e-9 {
            violations += 1;
        }
        if sq > 1e-24 {
            let q = pairing / sq;
            min_quotient = Some(min_quotient.map_or(q, |m: f64| m.min(q)));
        }
    }
    Ok(MonotonicityReport {
        trials,
        c: a.c(),
        min_quotient,
        violations,
        pass: violations == 0,
    })
}
