use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::neumann::NeumannReduction;
use super::pipelines::solve_reduced;
use super::{Problem, ProblemKind, Solution};
use crate::error::{Error, Result};
use crate::hilbert::{restrict_operator, sobolev_norm_c_plus_i, LinearMap, SobolevNormKind};
use crate::random::{gaussian_vector, seeded};

/// Slack of the `lhs ≤ rhs` comparison.
pub const ESTIMATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `L1`, `c`, `inv_c`.
    pub constants: BTreeMap<String, f64>,
    /// The individual quantities the right-hand side is assembled from.
    pub terms: BTreeMap<String, f64>,
    pub pass: bool,
}

impl EstimateReport {
    fn new(lhs: f64, rhs: f64, constants: &[(&str, f64)], terms: &[(&str, f64)]) -> Self {
        let collect = |xs: &[(&str, f64)]| xs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self {
            lhs,
            rhs,
            constants: collect(constants),
            terms: collect(terms),
            pass: lhs <= rhs + ESTIMATE_SLACK,
        }
    }

    /// `lhs / rhs`, or `None` when `rhs` vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

fn check_pair(p1: &Problem, p2: &Problem, s1: &Solution, s2: &Solution, kind: ProblemKind) -> Result<()> {
    for (p, s) in [(p1, s1), (p2, s2)] {
        if p.kind != kind || s.kind != kind {
            return Err(Error::Input(format!("estimate needs two {kind:?} problems and solutions")));
        }
    }
    let same = p1.a_map == p2.a_map
        && p1.c_map == p2.c_map
        && p1.inclusion == p2.inclusion
        && p1.relation.dim() == p2.relation.dim()
        && p1.relation.c() == p2.relation.c()
        && p1.relation.linear_part() == p2.relation.linear_part()
        && p1.relation.graphs() == p2.relation.graphs();
    if !same {
        return Err(Error::Input("estimate needs problems with identical operators and relation".into()));
    }
    Ok(())
}

/// Checks `|u − v|_{H₁(|C|+i)} ≤ L₁X + L₁|C(u₀ − v₀)| + |u₀ − v₀|_{H₁(|C|+i)}`
/// where, with `δ = |f − g|_{H₋₁(|B|)}` and `d = |C(u₀ − v₀)|`,
/// `X² = (2/c)·δ·d + (δ + |w₀|)²/c²` bounds `|Cu − Cv|`.
///
/// `w₀ = Mᵀ C(u₀ − v₀)` for a linear relation `M`; otherwise the boundary
/// data must coincide and `w₀ = 0`.
pub fn verify_dirichlet_estimate(
    p1: &Problem,
    p2: &Problem,
    s1: &Solution,
    s2: &Solution,
) -> Result<EstimateReport> {
    check_pair(p1, p2, s1, s2, ProblemKind::Dirichlet)?;
    let c_map = p1.c_map.as_ref().expect("Dirichlet problems carry C");
    let embed = p1.inclusion.as_ref().expect("Dirichlet problems carry an inclusion");
    let ctx = restrict_operator(&p1.a_map, p1.options.rank_tol)?;
    let c = p1.relation.c();

    let lhs = sobolev_norm_c_plus_i(c_map, SobolevNormKind::H1CPlusI, &(&s1.u - &s2.u))?;
    let df = ctx.ran_adj().project(&(&p1.f - &p2.f))?;
    let delta = ctx.sobolev_norm(SobolevNormKind::Hm1B, &df, None)?;
    let du0 = p1.boundary_data()? - p2.boundary_data()?;
    let cdu0 = c_map.apply(&du0)?;
    let d = cdu0.norm();
    let w0 = match p1.relation.linear_part() {
        Some(m) => m.tr_mul(&cdu0).norm(),
        None if du0.amax() == 0.0 => 0.0,
        None => {
            return Err(Error::Capability(
                "the Dirichlet estimate needs a linear relation or equal boundary data".into(),
            ))
        }
    };
    let x_bound = ((2.0 / c) * delta * d + (delta + w0).powi(2) / (c * c)).sqrt();
    let ce = LinearMap::new(c_map.matrix() * embed.basis())?;
    let l1 = ctx.embedding_constant(&ce)?;
    let u0_gap = sobolev_norm_c_plus_i(c_map, SobolevNormKind::H1CPlusI, &du0)?;
    let rhs = l1 * x_bound + l1 * d + u0_gap;
    let cu_gap = c_map.apply(&(&s1.u - &s2.u))?.norm();
    Ok(EstimateReport::new(
        lhs,
        rhs,
        &[("L1", l1), ("c", c), ("inv_c", 1.0 / c)],
        &[
            ("delta_f", delta),
            ("boundary_gap", d),
            ("w0", w0),
            ("cu_bound", x_bound),
            ("cu_gap", cu_gap),
            ("u0_gap", u0_gap),
        ],
    ))
}

/// Checks `|u − v|_{H₁(|B|)} ≤ (1/c)·sup_W |Δℓ(w)| + (1/c)·|P(u₀ − v₀)|` where
/// `Δℓ = (f − C*u₀) − (g − C*v₀)` and the supremum runs over the unit sphere
/// of `W = N(A)^⊥ ∩ D(C)` in `H₁(|B|)`.
pub fn verify_neumann_estimate(
    p1: &Problem,
    p2: &Problem,
    s1: &Solution,
    s2: &Solution,
) -> Result<EstimateReport> {
    check_pair(p1, p2, s1, s2, ProblemKind::Neumann)?;
    let inclusion = p1.inclusion.as_ref().expect("Neumann problems carry an inclusion");
    let ctx = restrict_operator(&p1.a_map, p1.options.rank_tol)?;
    let c = p1.relation.c();

    let lhs = p1.a_map.apply(&(&s1.u - &s2.u))?.norm();
    let reduction = NeumannReduction::new(&ctx, inclusion, p1.options.rank_tol)?;
    let du0 = p1.boundary_data()? - p2.boundary_data()?;
    let dell = NeumannReduction::functional(&ctx, &(&p1.f - &p2.f), &du0);
    let sup = reduction.dual_norm(&dell);
    let pu0 = ctx.ran().project(&du0)?.norm();
    let rhs = (sup + pu0) / c;
    Ok(EstimateReport::new(
        lhs,
        rhs,
        &[("c", c), ("inv_c", 1.0 / c)],
        &[("functional_gap", sup), ("projected_u0_gap", pu0)],
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    /// Largest `|A(u₁ − u₂)| / |f₁ − f₂|_{H₋₁(|B|)}` observed.
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `1/c`, the Lipschitz constant of `a⁻¹` when `a` is `c`-monotone.
    pub bound: f64,
}

/// Samples random right-hand sides in `N(A)^⊥` and records the observed
/// Lipschitz quotients of the solution map `f ↦ u`.
pub fn lipschitz_probe(template: &Problem, pairs: usize, seed: u64) -> Result<LipschitzReport> {
    if template.kind != ProblemKind::Homogeneous {
        return Err(Error::Input("the Lipschitz probe needs a homogeneous problem".into()));
    }
    if pairs == 0 {
        return Err(Error::Input("the Lipschitz probe needs at least one pair".into()));
    }
    template.validate()?;
    let ctx = restrict_operator(&template.a_map, template.options.rank_tol)?;
    if ctx.rank() == 0 {
        return Err(Error::Input("the Lipschitz probe needs a nonzero operator".into()));
    }
    let mut rng = seeded(seed);
    let n = template.a_map.cols();
    let sample = |rng: &mut _| -> Result<DVector<f64>> {
        ctx.ran_adj().project(&(gaussian_vector(rng, n) * 3.0))
    };
    let (mut max_ratio, mut min_ratio) = (0.0_f64, f64::INFINITY);
    let mut counted = 0;
    for _ in 0..pairs {
        let f1 = sample(&mut rng)?;
        let f2 = sample(&mut rng)?;
        let denom = ctx.sobolev_norm(SobolevNormKind::Hm1B, &(&f1 - &f2), None)?;
        if denom <= 1e-14 {
            continue;
        }
        let r1 = solve_reduced(&ctx, &template.relation, &f1, &template.options)?;
        let r2 = solve_reduced(&ctx, &template.relation, &f2, &template.options)?;
        let ratio = (&r1.g - &r2.g).norm() / denom;
        max_ratio = max_ratio.max(ratio);
        min_ratio = min_ratio.min(ratio);
        counted += 1;
    }
    if counted == 0 {
        min_ratio = 0.0;
    }
    Ok(LipschitzReport {
        pairs: counted,
        max_ratio,
        min_ratio,
        bound: 1.0 / template.relation.c(),
    })
}
