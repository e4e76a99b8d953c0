use nalgebra::{DMatrix, DVector, LU};

use super::neumann::NeumannReduction;
use super::{Diagnostics, KernelRhsPolicy, Problem, ProblemKind, Solution, SolverOptions};
use crate::error::{Error, Result};
use crate::hilbert::{
    restrict_operator, sobolev_norm_c_plus_i, RestrictedOperator, SobolevNormKind, Subspace,
};
use crate::relations::{projected_inverse, GraphPoint, Relation};

/// Output of the reduced pipeline `u = B⁻¹ (PaP*)⁻¹ (B*)⁻¹ f`.
pub(crate) struct Reduced {
    /// `w = (B*)⁻¹ f ∈ R(A)`
    pub w: DVector<f64>,
    /// `g = Bu ∈ R(A)`
    pub g: DVector<f64>,
    /// `v ∈ a(g)` with `Pv = w`.
    pub v: DVector<f64>,
    pub u: DVector<f64>,
    pub iterations: usize,
    pub step_residual: f64,
}

pub(crate) fn solve_reduced(
    ctx: &RestrictedOperator,
    relation: &Relation,
    f: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<Reduced> {
    let w = ctx.b_star_inverse(f)?;
    let (g, v, iterations, step_residual) = match relation.linear_part() {
        Some(m) if opts.linear_fast_path => {
            let (g, v) = projected_affine(relation, &m, ctx.ran(), &w)?;
            (g, v, 0, 0.0)
        }
        _ if ctx.rank() == ctx.codomain_dim() => (relation.inverse(&w)?, w.clone(), 0, 0.0),
        _ => {
            let sol = projected_inverse(relation, ctx.ran(), &w, &opts.splitting())?;
            (sol.point.x, sol.point.y, sol.iterations, sol.step_residual)
        }
    };
    let u = ctx.b_inverse(&g)?;
    Ok(Reduced {
        w,
        g,
        v,
        u,
        iterations,
        step_residual,
    })
}

/// Solves `w ∈ P a(x)`, `x ∈ U`, for `a(x) = M(x + p) − q`.
fn projected_affine(
    relation: &Relation,
    m: &DMatrix<f64>,
    u: &Subspace,
    w: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = relation.dim();
    let (p, q) = match relation.offset() {
        Some((p, q)) => (p.clone(), q.clone()),
        None => (DVector::zeros(n), DVector::zeros(n)),
    };
    let basis = u.basis();
    let x = if u.dim() == 0 {
        DVector::zeros(n)
    } else {
        let k = basis.tr_mul(&(m * basis));
        let rhs = basis.tr_mul(&(w + &q - m * &p));
        let xi = LU::new(k)
            .solve(&rhs)
            .ok_or_else(|| Error::Construction("projected linear relation is singular".into()))?;
        basis * xi
    };
    let y = m * (&x + &p) - q;
    Ok((x, y))
}

fn admissible_rhs(
    ctx: &RestrictedOperator,
    f: &DVector<f64>,
    policy: KernelRhsPolicy,
) -> Result<DVector<f64>> {
    match policy {
        KernelRhsPolicy::Reject => {
            ctx.check_in_domain("right-hand side", f)?;
            Ok(f.clone())
        }
        KernelRhsPolicy::Accept => ctx.ran_adj().project(f),
    }
}

fn expect_kind(p: &Problem, kind: ProblemKind) -> Result<()> {
    if p.kind != kind {
        return Err(Error::Input(format!(
            "expected a {kind:?} problem, got {:?}",
            p.kind
        )));
    }
    Ok(())
}

fn common_norms(d: &mut Diagnostics, red: &Reduced) {
    d.norm("h1b_u", red.g.norm());
    d.norm("h0_u", red.u.norm());
    d.norm("step_residual", red.step_residual);
    d.iterations = red.iterations;
}

fn rhs_norms(d: &mut Diagnostics, ctx: &RestrictedOperator, f: &DVector<f64>) -> Result<()> {
    d.norm("hm1b_f", ctx.sobolev_norm(SobolevNormKind::Hm1B, f, None)?);
    d.norm("h0_f", f.norm());
    Ok(())
}

/// `A*aA ∋ (u, f)` for `f ∈ N(A)^⊥`, with `u ∈ N(A)^⊥`.
pub fn solve_homogeneous(p: &Problem) -> Result<Solution> {
    p.validate()?;
    let ctx = restrict_operator(&p.a_map, p.options.rank_tol)?;
    let f = admissible_rhs(&ctx, &p.f, p.options.kernel_rhs)?;
    let red = solve_reduced(&ctx, &p.relation, &f, &p.options)?;
    let certificate = GraphPoint::new(&p.relation, red.g.clone(), red.v.clone())?;

    let mut d = Diagnostics::default();
    d.residual("graph_residual", certificate.residual);
    d.residual("adjoint_residual", (p.a_map.apply_transpose(&red.v)? - &f).norm());
    d.residual("range_residual", (ctx.ran().project(&red.v)? - &red.w).norm());
    d.residual("kernel_component_u", ctx.ker().project(&red.u)?.norm());
    common_norms(&mut d, &red);
    rhs_norms(&mut d, &ctx, &f)?;

    Ok(Solution {
        kind: ProblemKind::Homogeneous,
        u: red.u.clone(),
        certificate,
        w: red.w,
        diagnostics: d,
    })
}

/// `A*aC ∋ (u, f)` with `u − u₀ ∈ D(A)`, via the shifted relation
/// `a − (Cu₀, 0)`.
pub fn solve_dirichlet(p: &Problem) -> Result<Solution> {
    expect_kind(p, ProblemKind::Dirichlet)?;
    p.validate()?;
    let c = p.c_map.as_ref().expect("validated");
    let embed = p.inclusion.as_ref().expect("validated").basis();
    let u0 = p.boundary_data()?;

    let ctx = restrict_operator(&p.a_map, p.options.rank_tol)?;
    let f = admissible_rhs(&ctx, &p.f, p.options.kernel_rhs)?;
    let cu0 = c.apply(&u0)?;
    let shifted = p.relation.shift(&cu0, &DVector::zeros(cu0.len()))?;
    let red = solve_reduced(&ctx, &shifted, &f, &p.options)?;

    let u = &u0 + embed * &red.u;
    let cu = c.apply(&u)?;
    let certificate = GraphPoint::new(&p.relation, cu, red.v.clone())?;

    let mut d = Diagnostics::default();
    d.residual("graph_residual", certificate.residual);
    d.residual("shifted_graph_residual", shifted.graph_residual(&red.g, &red.v)?);
    d.residual("adjoint_residual", (p.a_map.apply_transpose(&red.v)? - &f).norm());
    d.residual("range_residual", (ctx.ran().project(&red.v)? - &red.w).norm());
    let correction = &u - &u0;
    d.residual(
        "inclusion_residual",
        (&correction - embed * embed.tr_mul(&correction)).norm(),
    );
    common_norms(&mut d, &red);
    rhs_norms(&mut d, &ctx, &f)?;
    d.norm("h0_u", u.norm());
    d.norm("h1_c_plus_i_u", sobolev_norm_c_plus_i(c, SobolevNormKind::H1CPlusI, &u)?);

    Ok(Solution {
        kind: ProblemKind::Dirichlet,
        u,
        certificate,
        w: red.w,
        diagnostics: d,
    })
}

/// `C*aA ∋ (u, f)` with the flux condition `A*(v − u₀) = 0` on the complement
/// of `D(C) ∩ N(A)^⊥`.
pub fn solve_neumann(p: &Problem) -> Result<Solution> {
    expect_kind(p, ProblemKind::Neumann)?;
    p.validate()?;
    let c = p.c_map.as_ref().expect("validated");
    let inclusion = p.inclusion.as_ref().expect("validated");
    let u0 = p.boundary_data()?;
    let a = &p.a_map;

    let ctx = restrict_operator(a, p.options.rank_tol)?;
    let kernel_f = ctx.ker().project(&p.f)?.norm();
    if p.options.kernel_rhs == KernelRhsPolicy::Reject {
        ctx.check_in_domain("right-hand side", &p.f)?;
    }
    let reduction = NeumannReduction::new(&ctx, inclusion, p.options.rank_tol)?;
    let ell = NeumannReduction::functional(&ctx, &p.f, &u0);
    let xi = reduction.riesz(&ctx, &ell);
    let shifted = p.relation.shift(&DVector::zeros(u0.len()), &u0)?;
    let red = solve_reduced(&ctx, &shifted, &xi, &p.options)?;

    let flux = &red.v + &u0;
    let certificate = GraphPoint::new(&p.relation, red.g.clone(), flux.clone())?;

    let mut d = Diagnostics::default();
    d.residual("graph_residual", certificate.residual);
    d.residual("shifted_graph_residual", shifted.graph_residual(&red.g, &red.v)?);
    d.residual("reduced_adjoint_residual", (a.apply_transpose(&red.v)? - &xi).norm());
    let aw = a.matrix() * &reduction.w_basis;
    let weak = (reduction.w_basis.tr_mul(&p.f) - aw.tr_mul(&flux)).amax();
    d.residual("weak_equation", if reduction.w_dim() == 0 { 0.0 } else { weak });
    let az = a.matrix() * &reduction.complement;
    let bc = az.tr_mul(&(&flux - &u0));
    d.residual("boundary_condition", if bc.is_empty() { 0.0 } else { bc.amax() });

    common_norms(&mut d, &red);
    d.norm("hm1b_xi", ctx.sobolev_norm(SobolevNormKind::Hm1B, &xi, None)?);
    d.norm("h0_f", p.f.norm());
    d.norm("kernel_component_f", kernel_f);
    let perp = reduction.complement.tr_mul(&p.f);
    d.norm("w_perp_discrepancy", if perp.is_empty() { 0.0 } else { perp.amax() });
    let e = inclusion.basis();
    let load = &p.f - e * c.apply_transpose(&u0)?;
    let compat = ctx.ker().basis().tr_mul(&load);
    d.norm("compatibility", if compat.is_empty() { 0.0 } else { compat.amax() });
    d.norm("w_dim", reduction.w_dim() as f64);

    Ok(Solution {
        kind: ProblemKind::Neumann,
        u: red.u,
        certificate,
        w: flux,
        diagnostics: d,
    })
}

/// Dispatches on the problem kind.
pub fn solve(p: &Problem) -> Result<Solution> {
    match p.kind {
        ProblemKind::Homogeneous => solve_homogeneous(p),
        ProblemKind::Dirichlet => solve_dirichlet(p),
        ProblemKind::Neumann => solve_neumann(p),
    }
}
