use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use elliptic_core::oracle::{
    active_set_solve, convex_min_solve, linear_direct_solve, neumann_linear_solve, ConvexMinOptions,
    MAX_ENUMERATION_ROWS,
};
use elliptic_core::random::{gaussian_vector, seeded};
use elliptic_core::relations::monotonicity_probe;
use elliptic_core::solver::{
    lipschitz_probe, solve, verify_dirichlet_estimate, verify_neumann_estimate, EstimateReport,
};
use elliptic_core::{
    hilbert::restrict_operator, DVector, Problem, ProblemKind, ScalarGraph, Solution,
};

use crate::config::{build_problem, load_config, Check, RunConfig, SCHEMA_VERSION};
use crate::report::{
    CheckOutcome, EstimateEntry, ErrorReport, OracleEntry, RunReport, SolutionReport, Status,
};
use crate::RunError;

/// Which subcommand is running; it decides the default check list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Runs the checks listed in the config.
    Solve,
    /// Runs the listed checks, or certificate, monotonicity and the
    /// estimate matching the problem kind when none are listed.
    Verify,
    /// Runs the certificate and oracle checks.
    OracleCheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Verify => "verify",
            Mode::OracleCheck => "oracle-check",
        }
    }
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Relative change applied to the data of the second problem of an
/// estimate check.
const PERTURBATION: f64 = 0.25;

/// Loads, solves and checks. Failures of any kind end up in the report.
pub fn run_config(path: &Path, overrides: Overrides, mode: Mode) -> RunReport {
    let start = Instant::now();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut report = match load_config(path) {
        Ok(cfg) => run_parsed(cfg, base, overrides, mode),
        Err(e) => error_report(mode, serde_json::Value::Null, &e),
    };
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

/// Like [`run_config`] for an already parsed config; relative paths resolve
/// against `base`. The timing field is left at zero.
pub fn run_parsed(mut cfg: RunConfig, base: &Path, overrides: Overrides, mode: Mode) -> RunReport {
    if let Some(tol) = overrides.tol {
        cfg.solver.tol = tol;
    }
    if let Some(seed) = overrides.seed {
        cfg.solver.seed = seed;
    }
    let echo = serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null);
    let problem = match build_problem(&cfg, base) {
        Ok(p) => p,
        Err(e) => return error_report(mode, echo, &e),
    };
    let solution = match solve(&problem) {
        Ok(s) => s,
        Err(e) => return error_report(mode, echo, &e.into()),
    };

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: mode.name().into(),
        status: Status::Ok,
        config: echo,
        solution: Some(SolutionReport {
            u: solution.u.as_slice().to_vec(),
            w: solution.w.as_slice().to_vec(),
            certificate_x: solution.certificate.x.as_slice().to_vec(),
            certificate_y: solution.certificate.y.as_slice().to_vec(),
        }),
        diagnostics: Some(solution.diagnostics.clone()),
        estimates: vec![],
        oracle: vec![],
        checks: vec![],
        error: None,
        timing_ms: 0.0,
    };

    let mut checks = checks_for(&cfg, mode, problem.kind);
    checks.sort();
    checks.dedup();
    if !checks.contains(&Check::Certificate) {
        checks.insert(0, Check::Certificate);
    }
    let ctx = Context { cfg: &cfg, problem: &problem, solution: &solution };
    for check in checks {
        let outcome = match check {
            Check::Certificate => Ok(ctx.certificate()),
            Check::Oracle => ctx.oracle().map(|entry| {
                let outcome = CheckOutcome {
                    check: "oracle".into(),
                    pass: entry.pass,
                    detail: entry.method.clone(),
                    values: values(&[("oracle_delta", entry.oracle_delta), ("tolerance", entry.tolerance)]),
                };
                report.oracle.push(entry);
                outcome
            }),
            Check::Lipschitz => ctx.lipschitz(),
            Check::Monotonicity => ctx.monotonicity(),
            Check::DirichletEstimate | Check::NeumannEstimate => {
                ctx.estimate(check).map(|(name, est)| {
                    let outcome = CheckOutcome {
                        check: name.into(),
                        pass: est.pass,
                        detail: format!("lhs {:.6e}, rhs {:.6e}", est.lhs, est.rhs),
                        values: values(&[("lhs", est.lhs), ("rhs", est.rhs)]),
                    };
                    report.estimates.push(EstimateEntry { name: name.into(), report: est });
                    outcome
                })
            }
        };
        report.checks.push(outcome.unwrap_or_else(|e| CheckOutcome {
            check: check_name(check).into(),
            pass: false,
            detail: format!("[{}] {e}", e.code()),
            values: BTreeMap::new(),
        }));
    }
    if report.checks.iter().any(|c| !c.pass) {
        report.status = Status::Failed;
    }
    report
}

fn checks_for(cfg: &RunConfig, mode: Mode, kind: ProblemKind) -> Vec<Check> {
    match mode {
        Mode::Solve => cfg.checks.clone(),
        Mode::Verify if !cfg.checks.is_empty() => cfg.checks.clone(),
        Mode::Verify => {
            let mut v = vec![Check::Certificate, Check::Monotonicity];
            match kind {
                ProblemKind::Homogeneous => v.push(Check::Lipschitz),
                ProblemKind::Dirichlet => v.push(Check::DirichletEstimate),
                ProblemKind::Neumann => v.push(Check::NeumannEstimate),
            }
            v
        }
        Mode::OracleCheck => vec![Check::Certificate, Check::Oracle],
    }
}

fn check_name(c: Check) -> &'static str {
    match c {
        Check::Certificate => "certificate",
        Check::Oracle => "oracle",
        Check::Lipschitz => "lipschitz",
        Check::DirichletEstimate => "dirichlet_estimate",
        Check::NeumannEstimate => "neumann_estimate",
        Check::Monotonicity => "monotonicity",
    }
}

fn values(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn error_report(mode: Mode, config: serde_json::Value, e: &RunError) -> RunReport {
    RunReport {
        schema_version: SCHEMA_VERSION,
        command: mode.name().into(),
        status: Status::Error,
        config,
        solution: None,
        diagnostics: None,
        estimates: vec![],
        oracle: vec![],
        checks: vec![],
        error: Some(ErrorReport { code: e.code().into(), message: e.to_string() }),
        timing_ms: 0.0,
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    problem: &'a Problem,
    solution: &'a Solution,
}

type CheckResult<T> = Result<T, elliptic_core::Error>;

impl Context<'_> {
    fn tol(&self) -> f64 {
        self.cfg.solver.tol
    }

    fn certificate(&self) -> CheckOutcome {
        let max = self.solution.diagnostics.max_residual();
        let bound = 10.0 * self.tol();
        CheckOutcome {
            check: "certificate".into(),
            pass: max <= bound,
            detail: format!("max residual {max:.3e}, bound {bound:.1e}"),
            values: values(&[("max_residual", max), ("bound", bound)]),
        }
    }

    fn oracle(&self) -> CheckResult<OracleEntry> {
        let p = self.problem;
        let u = &self.solution.u;
        let a = p.a_map.matrix();
        let unsupported =
            |what: &str| elliptic_core::Error::Capability(format!("no oracle for {what}"));
        let (method, reference, tolerance) = if let Some(m) = p.relation.linear_part() {
            match p.kind {
                ProblemKind::Homogeneous => ("linear_direct", linear_direct_solve(a, &m, &p.f)?, 1e-9),
                ProblemKind::Dirichlet => {
                    let (c_map, e, u0) = self.dirichlet_parts()?;
                    let cu0 = c_map.apply(&u0)?;
                    let load = &p.f - a.tr_mul(&(&m * cu0));
                    let x = linear_direct_solve(a, &m, &load)?;
                    ("linear_direct", u0 + e * x, 1e-9)
                }
                ProblemKind::Neumann => {
                    let embed = p.inclusion.as_ref().expect("Neumann problems carry an inclusion");
                    let u0 = p.boundary_data()?;
                    let x = neumann_linear_solve(a, embed.basis(), &m, &p.f, &u0)?;
                    ("neumann_linear", x, 1e-9)
                }
            }
        } else if let Some(graphs) = p.relation.graphs() {
            let c = p.relation.c();
            let enumerable = a.nrows() <= MAX_ENUMERATION_ROWS
                && !graphs.iter().any(|g| matches!(g, ScalarGraph::Power { .. }));
            match p.kind {
                ProblemKind::Homogeneous if enumerable => {
                    ("active_set", active_set_solve(a, c, graphs, &p.f, None)?, 1e-8)
                }
                ProblemKind::Homogeneous => (
                    "convex_min",
                    convex_min_solve(a, c, graphs, &p.f, ConvexMinOptions::default())?,
                    1e-6,
                ),
                ProblemKind::Dirichlet if enumerable => {
                    let (c_map, e, u0) = self.dirichlet_parts()?;
                    let shift = c_map.apply(&u0)?;
                    let zero = DVector::zeros(shift.len());
                    let x = active_set_solve(a, c, graphs, &p.f, Some((&shift, &zero)))?;
                    ("active_set", u0 + e * x, 1e-8)
                }
                ProblemKind::Dirichlet => return Err(unsupported("this Dirichlet relation")),
                ProblemKind::Neumann => return Err(unsupported("nonlinear Neumann problems")),
            }
        } else {
            return Err(unsupported("custom relations"));
        };
        let delta = (u - &reference).amax();
        let scaled = if method.starts_with("linear") || method.starts_with("neumann") {
            tolerance * reference.amax().max(1.0)
        } else {
            tolerance
        };
        Ok(OracleEntry {
            method: method.into(),
            oracle_delta: delta,
            tolerance: scaled,
            pass: delta <= scaled,
        })
    }

    fn dirichlet_parts(
        &self,
    ) -> CheckResult<(&elliptic_core::LinearMap, &elliptic_core::DMatrix<f64>, DVector<f64>)> {
        let p = self.problem;
        let c = p.c_map.as_ref().expect("Dirichlet problems carry C");
        let e = p.inclusion.as_ref().expect("Dirichlet problems carry an inclusion").basis();
        Ok((c, e, p.boundary_data()?))
    }

    fn lipschitz(&self) -> CheckResult<CheckOutcome> {
        let p = self.problem;
        let template = Problem::homogeneous(
            p.a_map.clone(),
            p.relation.clone(),
            DVector::zeros(p.a_map.cols()),
        )
        .with_options(p.options.clone());
        let r = lipschitz_probe(&template, self.cfg.solver.samples, self.cfg.solver.seed)?;
        let limit = r.bound * (1.0 + 1e-8) + 1e-12;
        Ok(CheckOutcome {
            check: "lipschitz".into(),
            pass: r.max_ratio <= limit,
            detail: format!("{} pairs, max ratio {:.6e}, bound {:.6e}", r.pairs, r.max_ratio, r.bound),
            values: values(&[
                ("pairs", r.pairs as f64),
                ("max_ratio", r.max_ratio),
                ("min_ratio", r.min_ratio),
                ("bound", r.bound),
            ]),
        })
    }

    fn monotonicity(&self) -> CheckResult<CheckOutcome> {
        let r = monotonicity_probe(&self.problem.relation, self.cfg.solver.samples, self.cfg.solver.seed)?;
        let mut vals = values(&[("c", r.c), ("violations", r.violations as f64)]);
        if let Some(q) = r.min_quotient {
            vals.insert("min_quotient".into(), q);
        }
        Ok(CheckOutcome {
            check: "monotonicity".into(),
            pass: r.pass,
            detail: format!("{} trials, {} violations", r.trials, r.violations),
            values: vals,
        })
    }

    /// Compares the solution with that of a seeded perturbation of the data.
    /// Boundary data is perturbed too unless the Dirichlet estimate would
    /// need a linear relation for it.
    fn estimate(&self, check: Check) -> CheckResult<(&'static str, EstimateReport)> {
        let p = self.problem;
        let (name, kind) = match check {
            Check::DirichletEstimate => ("dirichlet_estimate", ProblemKind::Dirichlet),
            _ => ("neumann_estimate", ProblemKind::Neumann),
        };
        if p.kind != kind {
            return Err(elliptic_core::Error::Input(format!(
                "{name} needs a {kind:?} problem, got {:?}",
                p.kind
            )));
        }
        let mut rng = seeded(self.cfg.solver.seed);
        let ctx = restrict_operator(&p.a_map, p.options.rank_tol)?;
        let scale = p.f.amax().max(1.0);
        let df = ctx.ran_adj().project(&(gaussian_vector(&mut rng, p.f.len()) * (PERTURBATION * scale)))?;
        let mut q = p.clone();
        q.f = &p.f + df;
        let u0 = p.boundary_data()?;
        if kind == ProblemKind::Neumann || p.relation.linear_part().is_some() {
            let du0 = gaussian_vector(&mut rng, u0.len()) * (PERTURBATION * u0.amax().max(1.0));
            q.u0 = Some(u0 + du0);
        }
        let s2 = solve(&q)?;
        let est = match kind {
            ProblemKind::Dirichlet => verify_dirichlet_estimate(p, &q, self.solution, &s2)?,
            _ => verify_neumann_estimate(p, &q, self.solution, &s2)?,
        };
        Ok((name, est))
    }
}
