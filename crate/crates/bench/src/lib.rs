//! Benchmark fixtures shared by the criterion benches.

use elliptic_core::operators::{build_operator, Boundary, Family, OperatorSpec};
use elliptic_core::relations::make_diagonal;
use elliptic_core::{DVector, LinearMap, Problem, Relation, ScalarGraph};

/// Zero-boundary 2D gradient on an `n × n` interior grid.
pub fn dirichlet_grad2d(n: usize) -> LinearMap {
    build_operator(&OperatorSpec::new(Family::Grad2D, &[n, n], 1.0 / (n + 1) as f64, Boundary::ZeroBoundary))
        .expect("valid spec")
        .matrix
}

/// Free 2D gradient on an `n × n` node grid; its kernel is the constants.
pub fn free_grad2d(n: usize) -> LinearMap {
    build_operator(&OperatorSpec::new(Family::Grad2D, &[n, n], 1.0, Boundary::Free))
        .expect("valid spec")
        .matrix
}

/// `-Δu = 1` with `a = id` on the zero-boundary grid.
pub fn poisson(n: usize) -> Problem {
    let a = dirichlet_grad2d(n);
    let rows = a.rows();
    let f = DVector::from_element(a.cols(), 1.0);
    Problem::homogeneous(a, Relation::identity(rows), f)
}

/// Same grid with the multi-valued coefficient `a(s) = s + sgn(s)`.
pub fn sign_poisson(n: usize) -> Problem {
    let a = dirichlet_grad2d(n);
    let rel = make_diagonal(1.0, vec![ScalarGraph::Sign; a.rows()]).expect("valid graphs");
    let f = DVector::from_element(a.cols(), 40.0);
    Problem::homogeneous(a, rel, f)
}
