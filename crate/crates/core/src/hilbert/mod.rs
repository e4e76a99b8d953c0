//! Finite-dimensional Hilbert-space machinery: linear maps, subspaces and
//! their projections, the restricted operator `B` and the Sobolev-chain norms
//! built from it.

mod linear_map;
mod restricted;
mod subspace;

pub use linear_map::LinearMap;
pub use restricted::{restrict_operator, sobolev_norm_c_plus_i, RestrictedOperator, SobolevNormKind};
pub use subspace::{kernel_basis, project, range_basis, Subspace, DEFAULT_RANK_TOL, ORTHONORMAL_TOL};
