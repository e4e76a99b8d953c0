//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use elliptic_core::hilbert::{restrict_operator, LinearMap, SobolevNormKind, Subspace};
use elliptic_core::operators::{build_operator, operator_pair, Boundary, Family, OperatorSpec};
use elliptic_core::oracle::{active_set_solve, convex_min_solve, linear_direct_solve, ConvexMinOptions};
use elliptic_core::random::{gaussian_matrix, gaussian_vector, seeded, SeededRng};
use elliptic_core::relations::{make_diagonal, projected_inverse, Relation, ScalarGraph, SplittingOptions};
use elliptic_core::solver::{
    lipschitz_probe, solve, verify_dirichlet_estimate, verify_neumann_estimate, KernelRhsPolicy,
};
use elliptic_core::{DMatrix, DVector, Problem, SolverOptions};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- helpers

fn orthonormal(rng: &mut SeededRng, n: usize, k: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, n, k).qr().q().columns(0, k).into_owned()
}

/// `U diag(σ) Vᵀ` with `σ ∈ [0.5, 2]` and the given rank.
fn random_operator(rng: &mut SeededRng, m: usize, n: usize, rank: usize) -> DMatrix<f64> {
    let u = orthonormal(rng, m, rank);
    let v = orthonormal(rng, n, rank);
    let s = DVector::from_fn(rank, |_, _| rng.random_range(0.5..2.0));
    u * DMatrix::from_diagonal(&s) * v.transpose()
}

fn random_shape(rng: &mut SeededRng, max_m: usize, max_n: usize) -> (usize, usize, usize) {
    let m = rng.random_range(1..=max_m);
    let n = rng.random_range(1..=max_n);
    let r = rng.random_range(1..=m.min(n));
    (m, n, r)
}

/// Orthonormal basis of the null space of `m`, from the eigenvectors of `mᵀm`.
fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let eig = (m.transpose() * m).symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&j| eig.eigenvalues[j] <= top * 1e-10)
        .map(|j| eig.eigenvectors.column(j).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Projection of `x` onto the orthogonal complement of the columns of `q`.
fn strip(q: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    x - q * q.tr_mul(x)
}

fn random_pd(rng: &mut SeededRng, n: usize, c: f64) -> DMatrix<f64> {
    let s = gaussian_matrix(rng, n, n);
    let g = gaussian_matrix(rng, n, n);
    DMatrix::identity(n, n) * c + &s * s.transpose() * 0.3 + (&g - g.transpose()) * 0.5
}

fn random_graph(rng: &mut SeededRng) -> ScalarGraph {
    match rng.random_range(0..5) {
        0 => ScalarGraph::Linear { slope: rng.random_range(0.0..2.0) },
        1 => ScalarGraph::Sign,
        2 => ScalarGraph::Power { p: rng.random_range(1.5..4.0) },
        3 => {
            let lo = rng.random_range(-1.5..0.0);
            ScalarGraph::Clamp { lo, hi: lo + rng.random_range(0.0..2.0) }
        }
        _ => ScalarGraph::Relay { height: rng.random_range(0.0..2.0) },
    }
}

/// A relation of family `family % 4`: linear, sign, power or mixed graphs.
fn relation_family(rng: &mut SeededRng, family: usize, n: usize) -> Relation {
    let c = rng.random_range(0.5..2.0);
    match family % 4 {
        0 => Relation::linear(&LinearMap::new(random_pd(rng, n, c)).unwrap(), 1e-12).unwrap(),
        1 => make_diagonal(c, vec![ScalarGraph::Sign; n]).unwrap(),
        2 => make_diagonal(c, vec![ScalarGraph::Power { p: rng.random_range(1.5..4.0) }; n]).unwrap(),
        _ => make_diagonal(c, (0..n).map(|_| random_graph(rng)).collect()).unwrap(),
    }
}

fn tight(tol: f64) -> SolverOptions {
    SolverOptions { tol, max_iter: 1_000_000, ..SolverOptions::default() }
}

fn random_pair(rng: &mut SeededRng) -> elliptic_core::OperatorPair {
    let h = rng.random_range(0.5..1.5);
    let spec = if rng.random_bool(0.5) {
        OperatorSpec::new(Family::Grad1D, &[rng.random_range(3..9)], h, Boundary::Free)
    } else {
        OperatorSpec::new(Family::Grad2D, &[rng.random_range(3..5), rng.random_range(3..5)], h, Boundary::Free)
    };
    operator_pair(&spec).unwrap()
}

fn dirichlet_instance(rng: &mut SeededRng, family: usize) -> Problem {
    let pair = random_pair(rng);
    let (a, c) = (pair.zero_boundary.matrix, pair.free.matrix);
    let rel = relation_family(rng, family, a.rows());
    let f = gaussian_vector(rng, a.cols());
    let u0 = gaussian_vector(rng, c.cols());
    Problem::dirichlet(a, c, pair.inclusion, rel, f, u0).with_options(tight(1e-11))
}

fn mean_free(rng: &mut SeededRng, a: &LinearMap) -> DVector<f64> {
    let ker = null_space(a.matrix());
    strip(&ker, &gaussian_vector(rng, a.cols()))
}

fn neumann_instance(rng: &mut SeededRng, family: usize) -> Problem {
    let pair = random_pair(rng);
    let (a, c) = (pair.free.matrix, pair.zero_boundary.matrix);
    let rel = relation_family(rng, family, a.rows());
    let f = mean_free(rng, &a);
    let u0 = gaussian_vector(rng, a.rows());
    Problem::neumann(a, c, pair.inclusion, rel, f, Some(u0)).with_options(tight(1e-11))
}

// ------------------------------------------------------------- criteria

fn c1_unitarity() -> Outcome {
    let mut rng = seeded(101);
    let (mut worst_h1, mut worst_hm1) = (0.0_f64, 0.0_f64);
    for _ in 0..25 {
        let (m, n, r) = random_shape(&mut rng, 20, 15);
        let a = random_operator(&mut rng, m, n, r);
        let map = LinearMap::new(a.clone()).map_err(err)?;
        let ctx = restrict_operator(&map, 1e-10).map_err(err)?;
        ensure(ctx.rank() == r, || format!("rank {} instead of {r}", ctx.rank()))?;
        let ker = null_space(&a);
        let coker = null_space(&a.transpose());
        for _ in 0..10 {
            let x = strip(&ker, &gaussian_vector(&mut rng, n));
            // |Ax| against B applied in coordinates
            let bx = ctx.b_matrix().apply(&ctx.ran_adj().coordinates(&x).map_err(err)?).map_err(err)?;
            let ax = (&a * &x).norm();
            worst_h1 = worst_h1.max((bx.norm() - ax).abs() / ax.max(1.0));
            let h1 = ctx.sobolev_norm(SobolevNormKind::H1B, &x, None).map_err(err)?;
            worst_h1 = worst_h1.max((h1 - ax).abs() / ax.max(1.0));
            let y = strip(&coker, &gaussian_vector(&mut rng, m));
            let hm1 = ctx.sobolev_norm(SobolevNormKind::Hm1B, &a.tr_mul(&y), None).map_err(err)?;
            worst_hm1 = worst_hm1.max((hm1 - y.norm()).abs());
        }
    }
    ensure(worst_h1 <= 1e-12, || format!("H1 mismatch {worst_h1:.2e}"))?;
    ensure(worst_hm1 <= 1e-9, || format!("H-1 mismatch {worst_hm1:.2e}"))?;
    Ok(format!("max H1 gap {worst_h1:.1e}, max H-1 gap {worst_hm1:.1e}"))
}

fn c2_resolvents() -> Outcome {
    let mut rng = seeded(202);
    let (mut nonexp, mut lip) = (0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for family in 0..4 {
        let n = rng.random_range(2..7);
        let rel = relation_family(&mut rng, family, n);
        for lambda in [0.1, 1.0, 10.0] {
            for _ in 0..200 {
                let z1 = gaussian_vector(&mut rng, n) * 3.0;
                let z2 = gaussian_vector(&mut rng, n) * 3.0;
                let j1 = rel.resolvent(lambda, &z1).map_err(err)?;
                let j2 = rel.resolvent(lambda, &z2).map_err(err)?;
                let excess = (&j1 - &j2).norm() - (&z1 - &z2).norm();
                worst = worst.max(excess);
                if excess > 1e-12 {
                    nonexp += 1;
                }
            }
        }
        for _ in 0..200 {
            let y1 = gaussian_vector(&mut rng, n) * 3.0;
            let y2 = gaussian_vector(&mut rng, n) * 3.0;
            let x1 = rel.inverse(&y1).map_err(err)?;
            let x2 = rel.inverse(&y2).map_err(err)?;
            if (&x1 - &x2).norm() > (&y1 - &y2).norm() / rel.c() + 1e-10 {
                lip += 1;
            }
        }
    }
    ensure(nonexp == 0 && lip == 0, || {
        format!("{nonexp} nonexpansiveness and {lip} Lipschitz violations (worst excess {worst:.2e})")
    })?;
    Ok(format!("2400 resolvent pairs, 800 inverse pairs, worst excess {worst:.1e}"))
}

fn c3_factorization() -> Outcome {
    let mut rng = seeded(303);
    let (mut worst_fast, mut worst_split) = (0.0_f64, 0.0_f64);
    for _ in 0..25 {
        let (m, n, r) = random_shape(&mut rng, 10, 8);
        let a = random_operator(&mut rng, m, n, r);
        let c = rng.random_range(0.5..2.0);
        let mm = random_pd(&mut rng, m, c);
        let rel = Relation::linear(&LinearMap::new(mm.clone()).unwrap(), 1e-12).map_err(err)?;
        let f = a.tr_mul(&gaussian_vector(&mut rng, m));
        let reference = linear_direct_solve(&a, &mm, &f).map_err(err)?;
        let scale = reference.norm().max(1e-300);
        let p = Problem::homogeneous(LinearMap::new(a).unwrap(), rel, f);
        let fast = solve(&p.clone().with_options(tight(1e-12))).map_err(err)?;
        worst_fast = worst_fast.max((&fast.u - &reference).norm() / scale);
        let opts = SolverOptions { linear_fast_path: false, ..tight(1e-13) };
        let split = solve(&p.with_options(opts)).map_err(err)?;
        worst_split = worst_split.max((&split.u - &reference).norm() / scale);
    }
    ensure(worst_fast <= 1e-9 && worst_split <= 1e-9, || {
        format!("relative gaps: direct {worst_fast:.2e}, splitting {worst_split:.2e}")
    })?;
    Ok(format!("relative gap direct {worst_fast:.1e}, splitting {worst_split:.1e}"))
}

fn c4_lipschitz() -> Outcome {
    let mut rng = seeded(404);
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let (m, n, r) = random_shape(&mut rng, 8, 8);
        let a = random_operator(&mut rng, m, n, r);
        let c = rng.random_range(0.5..3.0);
        let p = Problem::homogeneous(
            LinearMap::new(a).unwrap(),
            Relation::scaled_identity(m, c).unwrap(),
            DVector::zeros(n),
        );
        let rep = lipschitz_probe(&p, 100, rng.random()).map_err(err)?;
        worst = worst.max((rep.max_ratio - 1.0 / c).abs()).max((rep.min_ratio - 1.0 / c).abs());
    }
    ensure(worst <= 1e-10, || format!("c·id ratio off by {worst:.2e}"))?;

    let (s, co) = (0.6_f64.sin(), 0.6_f64.cos());
    let rot = DMatrix::from_row_slice(2, 2, &[co, -s, s, co]);
    let m = &rot * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])) * rot.transpose();
    let a = LinearMap::from_rows(2, 2, &[2.0, 1.0, 0.0, 1.0]).unwrap();
    let rel = Relation::linear(&LinearMap::new(m).unwrap(), 1e-12).map_err(err)?;
    let p = Problem::homogeneous(a, rel, DVector::zeros(2));
    let rep = lipschitz_probe(&p, 500, 4).map_err(err)?;
    ensure(rep.max_ratio >= 0.99 && rep.max_ratio <= 1.0 + 1e-10, || {
        format!("LinearPD sup ratio {:.6} against 1/λ_min = 1", rep.max_ratio)
    })?;
    Ok(format!("c·id gap {worst:.1e}; LinearPD sup {:.6} of 1/λ_min = 1", rep.max_ratio))
}

fn c5_multivalued() -> Outcome {
    let mut rng = seeded(505);
    let (mut worst_as, mut worst_cv) = (0.0_f64, 0.0_f64);
    for _ in 0..100 {
        let (m, n, r) = random_shape(&mut rng, 6, 6);
        let a = random_operator(&mut rng, m, n, r);
        let c = rng.random_range(0.5..2.0);
        let graphs = vec![ScalarGraph::Sign; m];
        let rel = make_diagonal(c, graphs.clone()).map_err(err)?;
        let f = a.tr_mul(&(gaussian_vector(&mut rng, m) * 2.0));
        let p = Problem::homogeneous(LinearMap::new(a.clone()).unwrap(), rel, f.clone()).with_options(tight(1e-13));
        let u = solve(&p).map_err(err)?.u;
        let reference = active_set_solve(&a, c, &graphs, &f, None).map_err(err)?;
        worst_as = worst_as.max((&u - &reference).amax());
        let convex = convex_min_solve(&a, c, &graphs, &f, ConvexMinOptions::default()).map_err(err)?;
        worst_cv = worst_cv.max((&u - &convex).amax());
    }
    ensure(worst_as <= 1e-8, || format!("active-set gap {worst_as:.2e}"))?;
    ensure(worst_cv <= 1e-6, || format!("variational gap {worst_cv:.2e}"))?;
    Ok(format!("active-set gap {worst_as:.1e}, variational gap {worst_cv:.1e}"))
}

fn c6_dirichlet() -> Outcome {
    let pair = operator_pair(&OperatorSpec::new(Family::Grad1D, &[6], 0.2, Boundary::Free)).unwrap();
    let ramp = DVector::from_fn(6, |i, _| i as f64 * 0.2);
    let mut ramp_gap = 0.0_f64;
    for rel in [
        Relation::scaled_identity(5, 2.0).unwrap(),
        make_diagonal(1.0, vec![ScalarGraph::Sign; 5]).unwrap(),
    ] {
        let p = Problem::dirichlet(
            pair.zero_boundary.matrix.clone(),
            pair.free.matrix.clone(),
            pair.inclusion.clone(),
            rel,
            DVector::zeros(4),
            ramp.clone(),
        )
        .with_options(tight(1e-12));
        ramp_gap = ramp_gap.max((solve(&p).map_err(err)?.u - &ramp).amax());
    }
    ensure(ramp_gap <= 1e-10, || format!("harmonic ramp off by {ramp_gap:.2e}"))?;

    let mut rng = seeded(606);
    let mut degen = 0.0_f64;
    for family in 0..8 {
        let mut p = dirichlet_instance(&mut rng, family);
        p.u0 = Some(DVector::zeros(p.c_map.as_ref().unwrap().cols()));
        let d = solve(&p).map_err(err)?;
        let h = Problem::homogeneous(p.a_map.clone(), p.relation.clone(), p.f.clone()).with_options(p.options.clone());
        let hs = solve(&h).map_err(err)?;
        let e = p.inclusion.as_ref().unwrap().basis();
        degen = degen.max((&d.u - e * &hs.u).amax());
    }
    ensure(degen <= 1e-12, || format!("u0 = 0 differs from the homogeneous solve by {degen:.2e}"))?;

    let mut worst = 0.0_f64;
    for k in 0..50 {
        let p = dirichlet_instance(&mut rng, k);
        let s = solve(&p).map_err(err)?;
        let c = p.c_map.as_ref().unwrap();
        let cu = c.apply(&s.u).map_err(err)?;
        let graph = p.relation.graph_residual(&cu, &s.certificate.y).map_err(err)?;
        let adjoint = (p.a_map.apply_transpose(&s.certificate.y).map_err(err)? - &p.f).amax();
        worst = worst.max(graph).max(adjoint).max((&s.certificate.x - cu).amax());
    }
    ensure(worst <= 1e-9, || format!("certificate residual {worst:.2e}"))?;
    Ok(format!("ramp gap {ramp_gap:.1e}, degeneracy gap {degen:.1e}, certificates {worst:.1e}"))
}

fn c7_neumann() -> Outcome {
    let pair = operator_pair(&OperatorSpec::new(Family::Grad2D, &[4, 3], 1.0, Boundary::Free)).unwrap();
    let a = pair.free.matrix.clone();
    let p = Problem::neumann(
        a.clone(),
        pair.zero_boundary.matrix.clone(),
        pair.inclusion.clone(),
        Relation::identity(a.rows()),
        DVector::from_element(a.cols(), 1.0),
        None,
    )
    .with_options(SolverOptions { kernel_rhs: KernelRhsPolicy::Accept, ..SolverOptions::default() });
    let kernel_u = solve(&p).map_err(err)?.u.norm();
    ensure(kernel_u <= 1e-9, || format!("|u| = {kernel_u:.2e} for a kernel load"))?;

    let mut rng = seeded(707);
    let (mut weak, mut bc, mut unique) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..50 {
        let p = neumann_instance(&mut rng, k);
        let s = solve(&p).map_err(err)?;
        let am = p.a_map.matrix();
        let e = p.inclusion.as_ref().unwrap().basis();
        let ker = null_space(am);
        let w = e * null_space(&ker.tr_mul(e));
        let aw = am * &w;
        let mut stacked = ker.transpose();
        if aw.ncols() > 0 {
            let rows = (aw.transpose() * am).transpose();
            stacked = DMatrix::from_columns(
                &stacked.transpose().column_iter().chain(rows.column_iter()).collect::<Vec<_>>(),
            )
            .transpose();
        }
        let z = null_space(&stacked);
        let flux = &s.certificate.y;
        let u0 = p.u0.as_ref().unwrap();
        if w.ncols() > 0 {
            weak = weak.max((w.tr_mul(&p.f) - aw.tr_mul(flux)).amax());
        }
        if z.ncols() > 0 {
            bc = bc.max((am * &z).tr_mul(&(flux - u0)).amax());
        }
        let start = gaussian_vector(&mut rng, p.a_map.rows()) * 5.0;
        let opts = SolverOptions { start: Some(start), linear_fast_path: false, ..p.options.clone() };
        let s2 = solve(&p.clone().with_options(opts)).map_err(err)?;
        unique = unique.max((&s.u - &s2.u).amax());
    }
    ensure(weak <= 1e-8 && bc <= 1e-8 && unique <= 1e-8, || {
        format!("weak {weak:.2e}, boundary {bc:.2e}, restart gap {unique:.2e}")
    })?;
    Ok(format!("|u| {kernel_u:.1e}, weak {weak:.1e}, boundary {bc:.1e}, restart gap {unique:.1e}"))
}

fn c8_estimates() -> Outcome {
    let mut rng = seeded(808);
    let mut worst_d = f64::NEG_INFINITY;
    let mut worst_n = f64::NEG_INFINITY;
    for k in 0..100 {
        let p1 = dirichlet_instance(&mut rng, k);
        let mut p2 = p1.clone();
        p2.f = &p1.f + gaussian_vector(&mut rng, p1.f.len()) * 0.5;
        if p1.relation.linear_part().is_some() {
            let u0 = p1.u0.as_ref().unwrap();
            p2.u0 = Some(u0 + gaussian_vector(&mut rng, u0.len()) * 0.5);
        }
        let (s1, s2) = (solve(&p1).map_err(err)?, solve(&p2).map_err(err)?);
        let r = verify_dirichlet_estimate(&p1, &p2, &s1, &s2).map_err(err)?;
        ensure(r.pass, || format!("Dirichlet pair {k}: lhs {:.6e} > rhs {:.6e}", r.lhs, r.rhs))?;
        worst_d = worst_d.max(r.lhs - r.rhs);
    }
    for k in 0..100 {
        let p1 = neumann_instance(&mut rng, k);
        let mut p2 = p1.clone();
        p2.f = &p1.f + mean_free(&mut rng, &p1.a_map) * 0.5;
        let u0 = p1.u0.as_ref().unwrap();
        p2.u0 = Some(u0 + gaussian_vector(&mut rng, u0.len()) * 0.5);
        let (s1, s2) = (solve(&p1).map_err(err)?, solve(&p2).map_err(err)?);
        let r = verify_neumann_estimate(&p1, &p2, &s1, &s2).map_err(err)?;
        ensure(r.pass, || format!("Neumann pair {k}: lhs {:.6e} > rhs {:.6e}", r.lhs, r.rhs))?;
        worst_n = worst_n.max(r.lhs - r.rhs);
    }
    Ok(format!("max lhs - rhs: Dirichlet {worst_d:.2e}, Neumann {worst_n:.2e}"))
}

fn c9_projection() -> Outcome {
    let mut rng = seeded(909);
    let opts = SplittingOptions { max_iter: 200_000, ..SplittingOptions::default() };
    let tol = opts.tol;
    let (mut runs, mut worst_violation, mut worst_proj) = (0usize, 0.0_f64, 0.0_f64);
    for family in 0..8 {
        let n = rng.random_range(2..7);
        let rel = relation_family(&mut rng, family, n);
        let mut points = Vec::new();
        for _ in 0..5 {
            let k = rng.random_range(1..n);
            let u = Subspace::span(&gaussian_matrix(&mut rng, n, k), 1e-10).map_err(err)?;
            for _ in 0..5 {
                let w = u.project(&(gaussian_vector(&mut rng, n) * 3.0)).map_err(err)?;
                let sol = projected_inverse(&rel, &u, &w, &opts).map_err(|e| format!("run {runs}: {e}"))?;
                let pv = u.project(&sol.point.y).map_err(err)?;
                worst_proj = worst_proj.max((pv - &w).amax()).max(u.distance(&sol.point.x).map_err(err)?);
                points.push(sol.point);
                runs += 1;
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                let dx = &points[i].x - &points[j].x;
                let dy = &points[i].y - &points[j].y;
                worst_violation = worst_violation.max(rel.c() * dx.norm_squared() - dx.dot(&dy));
            }
        }
    }
    ensure(worst_violation <= 10.0 * tol && worst_proj <= 10.0 * tol, || {
        format!("monotonicity deficit {worst_violation:.2e}, projection gap {worst_proj:.2e}")
    })?;
    Ok(format!("{runs} runs converged, deficit {worst_violation:.1e}, projection gap {worst_proj:.1e}"))
}

fn c10_builders() -> Outcome {
    for (family, shape) in [(Family::Grad1D, vec![7]), (Family::Grad2D, vec![4, 5]), (Family::Grad3D, vec![3, 4, 3])] {
        let op = build_operator(&OperatorSpec::new(family, &shape, 0.5, Boundary::Free)).map_err(err)?;
        let ones = DVector::from_element(op.matrix.cols(), 1.0);
        let image = op.matrix.apply(&ones).map_err(err)?;
        ensure(image.amax() == 0.0, || format!("{family:?}: A·1 = {:.2e}", image.amax()))?;
        let ctx = restrict_operator(&op.matrix, 1e-10).map_err(err)?;
        ensure(ctx.ker().dim() == 1, || format!("{family:?}: kernel dimension {}", ctx.ker().dim()))?;
    }
    let mut min_sigma = f64::INFINITY;
    for (family, shape) in [
        (Family::Grad1D, vec![5]),
        (Family::Grad2D, vec![4, 3]),
        (Family::Grad3D, vec![3, 3, 2]),
        (Family::SymGrad2D, vec![3, 3]),
    ] {
        let op = build_operator(&OperatorSpec::new(family, &shape, 0.25, Boundary::ZeroBoundary)).map_err(err)?;
        let sigma = op.matrix.matrix().singular_values().min();
        let ctx = restrict_operator(&op.matrix, 1e-10).map_err(err)?;
        ensure(sigma > 1e-8 && ctx.ker().dim() == 0, || format!("{family:?}: σ_min {sigma:.2e}"))?;
        ensure((ctx.poincare_constant() - sigma).abs() <= 1e-10 * sigma.max(1.0), || {
            format!("{family:?}: Poincaré constant {} against σ_min {sigma}", ctx.poincare_constant())
        })?;
        min_sigma = min_sigma.min(sigma);
    }
    let grad = build_operator(&OperatorSpec::new(Family::Grad3D, &[4, 4, 4], 1.0, Boundary::Free)).map_err(err)?;
    let curl = build_operator(&OperatorSpec::new(Family::Curl3D, &[4, 4, 4], 1.0, Boundary::Free)).map_err(err)?;
    let cg = curl.matrix.matrix() * grad.matrix.matrix();
    ensure(cg.amax() == 0.0, || format!("curl∘grad has entry {:.2e}", cg.amax()))?;

    let sym_gap = sym_grad_trace_gap()?;
    ensure(sym_gap <= 1e-12, || format!("Voigt versus trace sum gap {sym_gap:.2e}"))?;
    Ok(format!("min σ_min {min_sigma:.3e}, curl∘grad exact, Voigt gap {sym_gap:.1e}"))
}

/// `|Φ|` in the symmetric-gradient output against `√(Σ trace(εᵀε)·h²)`
/// with `ε` assembled cell by cell from forward differences.
fn sym_grad_trace_gap() -> Result<f64, String> {
    let mut rng = seeded(1010);
    let mut gap = 0.0_f64;
    for (boundary, extent) in [(Boundary::Free, 3usize), (Boundary::ZeroBoundary, 2)] {
        for _ in 0..10 {
            let h = rng.random_range(0.2..2.0);
            let op = build_operator(&OperatorSpec::new(Family::SymGrad2D, &[extent, extent], h, boundary))
                .map_err(err)?;
            let nodes = if boundary == Boundary::Free { extent } else { extent + 2 };
            let n = nodes * nodes;
            // full node field, zero outside the unknowns
            let mut phi = vec![[0.0_f64; 2]; n];
            let mut unknowns = DVector::zeros(op.matrix.cols());
            let interior: Vec<usize> = (0..n)
                .filter(|&k| boundary == Boundary::Free || {
                    let (i, j) = (k % nodes, k / nodes);
                    i > 0 && j > 0 && i + 1 < nodes && j + 1 < nodes
                })
                .collect();
            for (slot, &k) in interior.iter().enumerate() {
                let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                phi[k] = v;
                unknowns[slot] = v[0];
                unknowns[interior.len() + slot] = v[1];
            }
            let mut trace_sum = 0.0;
            for j in 0..nodes - 1 {
                for i in 0..nodes - 1 {
                    let here = phi[i + nodes * j];
                    let east = phi[i + 1 + nodes * j];
                    let north = phi[i + nodes * (j + 1)];
                    // grad[a][b] = ∂_b Φ_a
                    let g = [
                        [(east[0] - here[0]) / h, (north[0] - here[0]) / h],
                        [(east[1] - here[1]) / h, (north[1] - here[1]) / h],
                    ];
                    let eps = |a: usize, b: usize| 0.5 * (g[a][b] + g[b][a]);
                    let tr: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| eps(a, b).powi(2)).sum();
                    trace_sum += tr * h * h;
                }
            }
            let out = op.matrix.apply(&unknowns).map_err(err)?.norm();
            gap = gap.max((out - trace_sum.sqrt()).abs());
        }
    }
    Ok(gap)
}

fn c11_determinism() -> Outcome {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/sign_oracle.toml");
    let mut outputs = Vec::new();
    for _ in 0..3 {
        let out = Command::new(env!("CARGO_BIN_EXE_elliptic"))
            .args(["verify", "--config", config.to_str().unwrap(), "--seed", "42"])
            .output()
            .map_err(err)?;
        ensure(out.status.success(), || format!("exit status {}", out.status))?;
        let text = String::from_utf8(out.stdout).map_err(err)?;
        let stripped: String = text
            .lines()
            .filter(|l| !l.contains("\"timing_ms\""))
            .collect::<Vec<_>>()
            .join("\n");
        outputs.push(stripped);
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), || "reports differ between runs".into())?;
    Ok(format!("3 runs, {} identical bytes each", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("unitarity of the restricted operator", c1_unitarity),
        ("resolvent nonexpansiveness and inverse Lipschitz bound", c2_resolvents),
        ("factorization against the dense reduced solve", c3_factorization),
        ("Lipschitz constant of the solution map", c4_lipschitz),
        ("multi-valued relations against the oracles", c5_multivalued),
        ("Dirichlet reduction", c6_dirichlet),
        ("Neumann reduction", c7_neumann),
        ("continuity estimates", c8_estimates),
        ("projection theorem", c9_projection),
        ("operator builders", c10_builders),
        ("CLI determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} ({secs:.1} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
