//! The TOML run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use elliptic_core::operators::{operator_pair, Boundary, Family};
use elliptic_core::relations::make_diagonal;
use elliptic_core::solver::KernelRhsPolicy;
use elliptic_core::{
    io, DMatrix, DVector, LinearMap, OperatorSpec, Problem, ProblemKind, Relation, ScalarGraph,
    SolverOptions, Subspace,
};
use serde::{Deserialize, Serialize};

use crate::RunError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub checks: Vec<Check>,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Certificate,
    Oracle,
    Lipschitz,
    DirichletEstimate,
    NeumannEstimate,
    Monotonicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub operator: OperatorConfig,
    pub relation: RelationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_file: Option<PathBuf>,
    /// Accept right-hand sides with a component in `N(A)`.
    #[serde(default)]
    pub allow_kernel_rhs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub family: Family,
    /// Grid extents: interior unknowns for a homogeneous `zero_boundary`
    /// operator, grid nodes otherwise.
    #[serde(default)]
    pub shape: Vec<usize>,
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Matrix Market file of `A` for `family = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Matrix Market file of `C` for custom Dirichlet and Neumann problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_path: Option<PathBuf>,
    /// Coordinates of the larger domain spanned by the smaller one, for
    /// custom Dirichlet and Neumann problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<Vec<usize>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RelationConfig {
    /// `a = c·id`.
    Identity {
        #[serde(default = "one")]
        c: f64,
    },
    /// `a = M`, inline row by row or from a Matrix Market file.
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    /// `a(x)_i = c·x_i + β_i(x_i)`, one graph for every row or one per row.
    Diagonal {
        #[serde(default = "one")]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graph: Option<ScalarGraph>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graphs: Option<Vec<ScalarGraph>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// Random pairs drawn by the Lipschitz and monotonicity checks.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

fn default_max_iter() -> usize {
    SolverOptions::default().max_iter
}

fn default_samples() -> usize {
    50
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            lambda: None,
            max_iter: default_max_iter(),
            seed: 0,
            samples: default_samples(),
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, RunError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(RunError::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn vector(
    base: &Path,
    name: &str,
    inline: &Option<Vec<f64>>,
    file: &Option<PathBuf>,
) -> Result<Option<DVector<f64>>, RunError> {
    match (inline, file) {
        (Some(_), Some(_)) => Err(RunError::Config(format!(
            "problem.{name} and problem.{name}_file are mutually exclusive"
        ))),
        (Some(v), None) => Ok(Some(DVector::from_column_slice(v))),
        (None, Some(p)) => Ok(Some(io::read_vector(resolve(base, p))?)),
        (None, None) => Ok(None),
    }
}

/// The operator pair and inclusion subspace of a Dirichlet or Neumann
/// problem, ordered as `(A, C, inclusion)`.
fn pair(base: &Path, cfg: &ProblemConfig) -> Result<(LinearMap, LinearMap, Subspace), RunError> {
    let op = &cfg.operator;
    let (small, big, inclusion) = if op.family == Family::Custom {
        let read = |p: &Option<PathBuf>, key: &str| -> Result<LinearMap, RunError> {
            let p = p
                .as_ref()
                .ok_or_else(|| RunError::Config(format!("problem.operator.{key} is required")))?;
            Ok(io::read_matrix_market(resolve(base, p))?)
        };
        let a = read(&op.path, "path")?;
        let c = read(&op.c_path, "c_path")?;
        let idx = op
            .inclusion
            .as_ref()
            .ok_or_else(|| RunError::Config("problem.operator.inclusion is required".into()))?;
        // the operator with fewer columns is the restriction
        let (small, big) = if a.cols() <= c.cols() { (a, c) } else { (c, a) };
        let inclusion = Subspace::coordinate(big.cols(), idx)?;
        (small, big, inclusion)
    } else {
        let spec = OperatorSpec::new(op.family, &op.shape, op.h, Boundary::Free);
        let pair = operator_pair(&spec)?;
        (pair.zero_boundary.matrix, pair.free.matrix, pair.inclusion)
    };
    Ok(match cfg.kind {
        ProblemKind::Neumann => (big, small, inclusion),
        _ => (small, big, inclusion),
    })
}

fn relation(base: &Path, cfg: &RelationConfig, dim: usize, tol: f64) -> Result<Relation, RunError> {
    match cfg {
        RelationConfig::Identity { c } => Ok(Relation::scaled_identity(dim, *c)?),
        RelationConfig::Linear { matrix, path } => {
            let m = match (matrix, path) {
                (Some(rows), None) => {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(RunError::Config("problem.relation.matrix must be square".into()));
                    }
                    LinearMap::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))?
                }
                (None, Some(p)) => io::read_matrix_market(resolve(base, p))?,
                _ => {
                    return Err(RunError::Config(
                        "a linear relation needs exactly one of matrix or path".into(),
                    ))
                }
            };
            Ok(Relation::linear(&m, tol)?)
        }
        RelationConfig::Diagonal { c, graph, graphs } => {
            let graphs = match (graph, graphs) {
                (Some(g), None) => vec![*g; dim],
                (None, Some(gs)) => gs.clone(),
                _ => {
                    return Err(RunError::Config(
                        "a diagonal relation needs exactly one of graph or graphs".into(),
                    ))
                }
            };
            Ok(make_diagonal(*c, graphs)?)
        }
    }
}

/// Builds the problem, resolving files relative to `base`.
pub fn build_problem(cfg: &RunConfig, base: &Path) -> Result<Problem, RunError> {
    let pc = &cfg.problem;
    let f = vector(base, "f", &pc.f, &pc.f_file)?
        .ok_or_else(|| RunError::Config("problem.f or problem.f_file is required".into()))?;
    let u0 = vector(base, "u0", &pc.u0, &pc.u0_file)?;
    let options = SolverOptions {
        tol: cfg.solver.tol,
        lambda: cfg.solver.lambda,
        max_iter: cfg.solver.max_iter,
        kernel_rhs: if pc.allow_kernel_rhs {
            KernelRhsPolicy::Accept
        } else {
            KernelRhsPolicy::Reject
        },
        ..SolverOptions::default()
    };
    let problem = match pc.kind {
        ProblemKind::Homogeneous => {
            let spec = OperatorSpec {
                family: pc.operator.family,
                shape: pc.operator.shape.clone(),
                h: pc.operator.h,
                boundary: pc.operator.boundary,
                path: pc.operator.path.as_ref().map(|p| resolve(base, p)),
            };
            let a = elliptic_core::operators::build_operator(&spec)?.matrix;
            let rel = relation(base, &pc.relation, a.rows(), options.rank_tol)?;
            Problem::homogeneous(a, rel, f)
        }
        ProblemKind::Dirichlet => {
            let (a, c, inclusion) = pair(base, pc)?;
            let u0 = u0.unwrap_or_else(|| DVector::zeros(c.cols()));
            let rel = relation(base, &pc.relation, a.rows(), options.rank_tol)?;
            Problem::dirichlet(a, c, inclusion, rel, f, u0)
        }
        ProblemKind::Neumann => {
            let (a, c, inclusion) = pair(base, pc)?;
            let rel = relation(base, &pc.relation, a.rows(), options.rank_tol)?;
            Problem::neumann(a, c, inclusion, rel, f, u0)
        }
    };
    Ok(problem.with_options(options))
}
