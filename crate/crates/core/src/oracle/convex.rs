use nalgebra::{DMatrix, DVector};

use super::row_and_null_space;
use crate::error::{Error, Result};
use crate::relations::ScalarGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexMinOptions {
    pub max_iter: usize,
    /// Stop once the iterate violates `s ∈ R(A)` by at most this much.
    pub tol: f64,
}

impl Default for ConvexMinOptions {
    fn default() -> Self {
        Self {
            max_iter: 1_000_000,
            tol: 1e-13,
        }
    }
}

/// Scalar potential `φ` with `∂φ = β`.
#[derive(Clone, Copy)]
enum Potential {
    Quadratic(f64),
    Abs,
    Power(f64),
}

impl Potential {
    fn of(g: &ScalarGraph) -> Result<Self> {
        match *g {
            ScalarGraph::Linear { slope } => Ok(Self::Quadratic(slope)),
            ScalarGraph::Sign => Ok(Self::Abs),
            ScalarGraph::Power { p } => Ok(Self::Power(p)),
            other => Err(Error::Capability(format!(
                "{other:?} is not handled by the variational oracle"
            ))),
        }
    }

    fn value(self, s: f64) -> f64 {
        match self {
            Self::Quadratic(m) => 0.5 * m * s * s,
            Self::Abs => s.abs(),
            Self::Power(p) => s.abs().powf(p) / p,
        }
    }

    /// `argmin_s (c/2)s² + φ(s) − z·s`
    fn minimizer(self, c: f64, z: f64) -> f64 {
        match self {
            Self::Quadratic(m) => z / (c + m),
            Self::Abs => z.signum() * (z.abs() - 1.0).max(0.0) / c,
            Self::Power(p) => {
                // c·s + s^{p−1} = |z| has its root in [0, |z|/c]
                let t = z.abs();
                let (mut lo, mut hi) = (0.0_f64, t / c);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if c * mid + mid.powf(p - 1.0) > t {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                z.signum() * 0.5 * (lo + hi)
            }
        }
    }
}

/// `(c/2)|Au|² + Σ φ_i((Au)_i) − ⟨f, u⟩`
pub fn convex_objective(
    a: &DMatrix<f64>,
    c: f64,
    graphs: &[ScalarGraph],
    f: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    let s = a * u;
    let mut total = 0.5 * c * s.norm_squared() - f.dot(u);
    for (g, &si) in graphs.iter().zip(s.iter()) {
        total += Potential::of(g)?.value(si);
    }
    Ok(total)
}

/// Minimizes `(c/2)|Au|² + Σ φ_i((Au)_i) − ⟨f, u⟩` over `N(A)^⊥`.
///
/// With `s = Au` and `w ∈ R(A)` such that `A*w = f`, this is
/// `min Σ [(c/2)s_i² + φ_i(s_i)] − ⟨w, s⟩` over `s ∈ R(A)`. The constraint
/// `Nᵀs = 0` (`N` an orthonormal basis of `N(A*)`) is dualized and the dual,
/// which is smooth with `1/c`-Lipschitz gradient, is maximized by
/// accelerated gradient ascent with step `c` and adaptive restart.
pub fn convex_min_solve(
    a: &DMatrix<f64>,
    c: f64,
    graphs: &[ScalarGraph],
    f: &DVector<f64>,
    opts: ConvexMinOptions,
) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if graphs.len() != m || f.len() != n {
        return Err(Error::Oracle("shape mismatch between A, graphs and f".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Oracle(format!("c must be positive, got {c}")));
    }
    let pots: Vec<Potential> = graphs.iter().map(Potential::of).collect::<Result<_>>()?;
    let (v, _) = row_and_null_space(a);
    let (_, coker) = row_and_null_space(&a.transpose());
    let av = a * &v;
    let gram = av.tr_mul(&av);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Oracle("reduced Gram matrix is singular".into()))?;
    let w = &av * chol.solve(&v.tr_mul(f));

    let s_of = |z: &DVector<f64>| {
        DVector::from_iterator(m, pots.iter().zip(z.iter()).map(|(p, &zi)| p.minimizer(c, zi)))
    };

    let s = if coker.ncols() == 0 {
        s_of(&w)
    } else {
        let k = coker.ncols();
        let mut lambda = DVector::zeros(k);
        let mut y = lambda.clone();
        let mut t = 1.0_f64;
        let mut s = s_of(&w);
        for _ in 0..opts.max_iter {
            s = s_of(&(&w - &coker * &y));
            let grad = coker.tr_mul(&s);
            if grad.norm() <= opts.tol {
                break;
            }
            let next = &y + grad * c;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let step = &next - &lambda;
            // restart the momentum when it points against the ascent direction
            if (&next - &y).dot(&step) < 0.0 {
                t = 1.0;
                y = next.clone();
            } else {
                y = &next + step * ((t - 1.0) / t_next);
                t = t_next;
            }
            lambda = next;
        }
        s
    };
    let eta = chol.solve(&av.tr_mul(&s));
    Ok(v * eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grad3() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0])
    }

    #[test]
    fn quadratic_matches_poisson() {
        let f = DVector::from_element(3, 1.0);
        let u = convex_min_solve(&grad3(), 1.0, &[ScalarGraph::Linear { slope: 0.0 }; 4], &f, Default::default())
            .unwrap();
        assert_relative_eq!(u, DVector::from_vec(vec![1.5, 2.0, 1.5]), epsilon = 1e-8);
    }

    #[test]
    fn zero_rhs() {
        let u = convex_min_solve(&grad3(), 2.0, &[ScalarGraph::Sign; 4], &DVector::zeros(3), Default::default())
            .unwrap();
        assert!(u.norm() <= 1e-12);
    }

    #[test]
    fn power_scalar_minimizer() {
        // s + s² = 2 at s = 1
        assert_relative_eq!(Potential::Power(3.0).minimizer(1.0, 2.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_potential_graphs() {
        let err = convex_min_solve(
            &DMatrix::identity(1, 1),
            1.0,
            &[ScalarGraph::Relay { height: 1.0 }],
            &DVector::zeros(1),
            Default::default(),
        )
        .unwrap_err();
        assert_eq!(err.code(), "unsupported");
    }
}
