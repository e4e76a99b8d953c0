//! `c`-maximal monotone relations with full domain, represented by the
//! resolvent of their monotone base part `a − c`.

mod projected;
mod relation;
mod scalar;

pub use projected::{
    monotonicity_probe, projected_inverse, GraphPoint, MonotonicityReport, ProjectedSolution,
    SplittingOptions, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use relation::{
    make_diagonal, make_linear, symmetric_part_min_eigenvalue, CustomResolvent, Descriptor,
    PreparedResolvent, Relation,
};
pub use scalar::{ScalarGraph, SCALAR_ROOT_TOL};

