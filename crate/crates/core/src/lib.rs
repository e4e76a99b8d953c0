//! Solvers for elliptic inclusions `A*aA ∋ (u, f)` with strongly monotone,
//! possibly multi-valued coefficient relations `a`, in finite dimension.

pub mod error;
pub mod hilbert;
pub mod io;
pub mod operators;
pub mod oracle;
pub mod random;
pub mod relations;
pub mod solver;

pub use error::{Error, Result};
pub use hilbert::{LinearMap, RestrictedOperator, SobolevNormKind, Subspace};
pub use nalgebra::{DMatrix, DVector};
pub use operators::{BuiltOperator, OperatorPair, OperatorSpec};
pub use relations::{GraphPoint, Relation, ScalarGraph};
pub use solver::{Problem, ProblemKind, Solution, SolverOptions};
