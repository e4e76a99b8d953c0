//! Forward-difference operators on tensor grids.
//!
//! Every builder has a `Free` variant whose unknowns are all grid nodes and a
//! `ZeroBoundary` variant whose unknowns are the interior nodes, with values
//! outside the index set taken as zero. The zero-boundary operator keeps the
//! full row set of the free operator on the enclosing grid, so that
//! `C·E = A` holds exactly for the coordinate embedding `E` of the interior
//! unknowns (rows between two boundary nodes are identically zero).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{LinearMap, Subspace};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Grad1D,
    Grad2D,
    Grad3D,
    SymGrad2D,
    Curl3D,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    ZeroBoundary,
    #[default]
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub family: Family,
    /// Grid extents. For `ZeroBoundary` these count interior unknowns, for
    /// `Free` all nodes.
    #[serde(default)]
    pub shape: Vec<usize>,
    #[serde(default = "default_spacing")]
    pub h: f64,
    #[serde(default)]
    pub boundary: Boundary,
    /// Matrix Market file for `Custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_spacing() -> f64 {
    1.0
}

impl OperatorSpec {
    pub fn new(family: Family, shape: &[usize], h: f64, boundary: Boundary) -> Self {
        Self {
            family,
            shape: shape.to_vec(),
            h,
            boundary,
            path: None,
        }
    }

    pub fn custom(path: impl Into<PathBuf>) -> Self {
        Self {
            family: Family::Custom,
            shape: Vec::new(),
            h: 1.0,
            boundary: Boundary::Free,
            path: Some(path.into()),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Input(format!("grid spacing must be positive, got {}", self.h)));
        }
        let expected = match self.family {
            Family::Grad1D => 1,
            Family::Grad2D | Family::SymGrad2D => 2,
            Family::Grad3D | Family::Curl3D => 3,
            Family::Custom => return Ok(()),
        };
        if self.shape.len() != expected {
            return Err(Error::Input(format!(
                "{:?} needs {expected} grid extents, got {}",
                self.family,
                self.shape.len()
            )));
        }
        let min = match self.boundary {
            Boundary::ZeroBoundary => 1,
            Boundary::Free => 2,
        };
        if self.shape.iter().any(|&n| n < min) {
            return Err(Error::Input(format!(
                "grid extents must be at least {min} for {:?}, got {:?}",
                self.boundary, self.shape
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltOperator {
    pub matrix: LinearMap,
    pub kernel_hint: String,
    /// Per-row factors folded into the symmetric-gradient rows (quadrature
    /// weight times the Voigt √2 on shear rows).
    pub voigt_weights: Option<Vec<f64>>,
}

impl BuiltOperator {
    /// The discrete divergence `−Aᵀ`.
    pub fn divergence(&self) -> LinearMap {
        self.matrix.transpose().scaled(-1.0)
    }
}

/// The zero-boundary operator, the free operator on the enclosing grid and the
/// interior-unknown subspace of the free domain.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub zero_boundary: BuiltOperator,
    pub free: BuiltOperator,
    /// Spanned by the coordinate directions of the interior unknowns, in the
    /// column order of `zero_boundary`.
    pub inclusion: Subspace,
}

/// Node indexing `i + nx·(j + ny·k)`.
#[derive(Debug, Clone, Copy)]
struct Grid {
    n: [usize; 3],
}

impl Grid {
    fn new(shape: &[usize]) -> Self {
        let mut n = [1; 3];
        n[..shape.len()].copy_from_slice(shape);
        Self { n }
    }

    fn nodes(&self) -> usize {
        self.n.iter().product()
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    fn is_interior(&self, p: [usize; 3], dims: usize) -> bool {
        (0..dims).all(|d| p[d] > 0 && p[d] + 1 < self.n[d])
    }

    fn points(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let n = self.n;
        (0..n[2]).flat_map(move |k| (0..n[1]).flat_map(move |j| (0..n[0]).map(move |i| [i, j, k])))
    }

    /// Edges along `dir`: one per node whose successor in `dir` exists.
    fn edges(&self, dir: usize) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.points().filter(move |p| p[dir] + 1 < self.n[dir])
    }

    fn step(p: [usize; 3], dir: usize) -> [usize; 3] {
        let mut q = p;
        q[dir] += 1;
        q
    }

    fn at(&self, p: [usize; 3]) -> usize {
        self.idx(p[0], p[1], p[2])
    }
}

/// Row-by-row sparse assembly into a dense matrix.
struct Assembler {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl Assembler {
    fn new(cols: usize) -> Self {
        Self {
            rows: Vec::new(),
            cols,
        }
    }

    fn push(&mut self, row: Vec<(usize, f64)>) {
        self.rows.push(row);
    }

    fn finish(self) -> Result<LinearMap> {
        let mut m = DMatrix::zeros(self.rows.len(), self.cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        LinearMap::new(m)
    }
}

fn free_gradient(grid: &Grid, dims: usize, h: f64) -> Result<LinearMap> {
    let mut asm = Assembler::new(grid.nodes());
    for dir in 0..dims {
        for p in grid.edges(dir) {
            asm.push(vec![(grid.at(p), -1.0 / h), (grid.at(Grid::step(p, dir)), 1.0 / h)]);
        }
    }
    asm.finish()
}

/// Edge numbering of the 3D staggered layout: x-edges, then y-, then z-edges.
fn edge_numbering(grid: &Grid) -> [Vec<Option<usize>>; 3] {
    let mut next = 0;
    let mut out: [Vec<Option<usize>>; 3] = Default::default();
    for (dir, slot) in out.iter_mut().enumerate() {
        *slot = vec![None; grid.nodes()];
        for p in grid.edges(dir) {
            slot[grid.at(p)] = Some(next);
            next += 1;
        }
    }
    out
}

fn free_curl(grid: &Grid, h: f64) -> Result<LinearMap> {
    let edges = edge_numbering(grid);
    let n_edges = edges.iter().map(|e| e.iter().flatten().count()).sum();
    let e = |dir: usize, p: [usize; 3]| edges[dir][grid.at(p)].expect("edge exists by construction");
    let mut asm = Assembler::new(n_edges);
    // component `comp` is the circulation around the face spanned by (a, b)
    for (a, b) in [(1, 2), (2, 0), (0, 1)] {
        let faces: Vec<[usize; 3]> = grid
            .points()
            .filter(|p| p[a] + 1 < grid.n[a] && p[b] + 1 < grid.n[b])
            .collect();
        for p in faces {
            // ∂_a E_b − ∂_b E_a
            asm.push(vec![
                (e(b, Grid::step(p, a)), 1.0 / h),
                (e(b, p), -1.0 / h),
                (e(a, Grid::step(p, b)), -1.0 / h),
                (e(a, p), 1.0 / h),
            ]);
        }
    }
    asm.finish()
}

/// Rows `h·(ε₁₁, ε₂₂, √2 ε₁₂)` per grid cell, evaluated with forward
/// differences at the lower-left node. Unknowns are `(Φ₁ at all nodes, Φ₂ at
/// all nodes)`.
fn free_sym_gradient(grid: &Grid, h: f64) -> Result<(LinearMap, Vec<f64>)> {
    let n = grid.nodes();
    let mut asm = Assembler::new(2 * n);
    let mut weights = Vec::new();
    let s2 = std::f64::consts::SQRT_2;
    let cells: Vec<[usize; 3]> = grid
        .points()
        .filter(|p| p[0] + 1 < grid.n[0] && p[1] + 1 < grid.n[1])
        .collect();
    for p in cells {
        let here = grid.at(p);
        let east = grid.at(Grid::step(p, 0));
        let north = grid.at(Grid::step(p, 1));
        // quadrature weight h times the 1/h of the difference quotient
        let w = h * (1.0 / h);
        asm.push(vec![(east, w), (here, -w)]);
        asm.push(vec![(n + north, w), (n + here, -w)]);
        let ws = w * s2 * 0.5;
        asm.push(vec![(n + east, ws), (n + here, -ws), (north, ws), (here, -ws)]);
        weights.extend_from_slice(&[h, h, s2 * h]);
    }
    Ok((asm.finish()?, weights))
}

fn interior_indices(grid: &Grid, dims: usize) -> Vec<usize> {
    grid.points()
        .filter(|p| grid.is_interior(*p, dims))
        .map(|p| grid.at(p))
        .collect()
}

fn dims_of(family: Family) -> usize {
    match family {
        Family::Grad1D => 1,
        Family::Grad2D | Family::SymGrad2D => 2,
        Family::Grad3D | Family::Curl3D => 3,
        Family::Custom => 0,
    }
}

/// Free operator on the node grid `shape`, plus its per-row weights.
fn build_free(family: Family, shape: &[usize], h: f64) -> Result<BuiltOperator> {
    let grid = Grid::new(shape);
    let dims = dims_of(family);
    Ok(match family {
        Family::Grad1D | Family::Grad2D | Family::Grad3D => BuiltOperator {
            matrix: free_gradient(&grid, dims, h)?,
            kernel_hint: "constants on connected grid".into(),
            voigt_weights: None,
        },
        Family::SymGrad2D => {
            let (matrix, weights) = free_sym_gradient(&grid, h)?;
            BuiltOperator {
                matrix,
                kernel_hint: "rigid motions".into(),
                voigt_weights: Some(weights),
            }
        }
        Family::Curl3D => BuiltOperator {
            matrix: free_curl(&grid, h)?,
            kernel_hint: "gradients of node fields".into(),
            voigt_weights: None,
        },
        Family::Custom => unreachable!("custom operators are read from file"),
    })
}

fn unknown_indices(family: Family, grid: &Grid, dims: usize) -> Vec<usize> {
    let interior = interior_indices(grid, dims);
    match family {
        Family::SymGrad2D => {
            let n = grid.nodes();
            interior.iter().copied().chain(interior.iter().map(|i| i + n)).collect()
        }
        _ => interior,
    }
}

fn restrict_columns(m: &LinearMap, cols: &[usize]) -> Result<LinearMap> {
    LinearMap::new(m.matrix().select_columns(cols))
}

pub fn build_operator(spec: &OperatorSpec) -> Result<BuiltOperator> {
    spec.validate()?;
    if spec.family == Family::Custom {
        let path = spec
            .path
            .as_ref()
            .ok_or_else(|| Error::Input("custom operator needs a Matrix Market path".into()))?;
        return Ok(BuiltOperator {
            matrix: crate::io::read_matrix_market(path)?,
            kernel_hint: "unknown".into(),
            voigt_weights: None,
        });
    }
    match spec.boundary {
        Boundary::Free => build_free(spec.family, &spec.shape, spec.h),
        Boundary::ZeroBoundary => {
            if spec.family == Family::Curl3D {
                return Err(Error::Capability(
                    "only the free curl variant is available".into(),
                ));
            }
            let full: Vec<usize> = spec.shape.iter().map(|n| n + 2).collect();
            let pair = pair_on_grid(spec.family, &full, spec.h)?;
            Ok(pair.zero_boundary)
        }
    }
}

fn pair_on_grid(family: Family, nodes: &[usize], h: f64) -> Result<OperatorPair> {
    let grid = Grid::new(nodes);
    let dims = dims_of(family);
    let free = build_free(family, nodes, h)?;
    let cols = unknown_indices(family, &grid, dims);
    let zero = BuiltOperator {
        matrix: restrict_columns(&free.matrix, &cols)?,
        kernel_hint: "trivial".into(),
        voigt_weights: free.voigt_weights.clone(),
    };
    let inclusion = Subspace::coordinate(free.matrix.cols(), &cols)?;
    Ok(OperatorPair {
        zero_boundary: zero,
        free,
        inclusion,
    })
}

/// Zero-boundary and free operators on the node grid `spec.shape`.
pub fn operator_pair(spec: &OperatorSpec) -> Result<OperatorPair> {
    match spec.family {
        Family::Grad1D | Family::Grad2D | Family::Grad3D | Family::SymGrad2D => {}
        other => {
            return Err(Error::Capability(format!(
                "{other:?} has no zero-boundary/free pair"
            )))
        }
    }
    let free_spec = OperatorSpec {
        boundary: Boundary::Free,
        ..spec.clone()
    };
    free_spec.validate()?;
    if spec.shape.iter().any(|&n| n < 3) {
        return Err(Error::Input(format!(
            "an operator pair needs at least 3 nodes per direction, got {:?}",
            spec.shape
        )));
    }
    pair_on_grid(spec.family, &spec.shape, spec.h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{kernel_basis, DEFAULT_RANK_TOL};
    use nalgebra::DVector;

    #[test]
    fn dirichlet_grad1d_stencil() {
        let op = build_operator(&OperatorSpec::new(Family::Grad1D, &[3], 1.0, Boundary::ZeroBoundary)).unwrap();
        let expected = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0]);
        assert_eq!(op.matrix.matrix(), &expected);
    }

    #[test]
    fn free_grad1d_stencil() {
        let op = build_operator(&OperatorSpec::new(Family::Grad1D, &[3], 1.0, Boundary::Free)).unwrap();
        let expected = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(op.matrix.matrix(), &expected);
        assert_eq!(kernel_basis(&op.matrix, DEFAULT_RANK_TOL).unwrap().dim(), 1);
    }

    #[test]
    fn spacing_scales_stencil() {
        let op = build_operator(&OperatorSpec::new(Family::Grad1D, &[3], 0.5, Boundary::Free)).unwrap();
        assert_eq!(op.matrix.matrix()[(0, 1)], 2.0);
    }

    #[test]
    fn grad2d_shapes() {
        let free = build_operator(&OperatorSpec::new(Family::Grad2D, &[3, 4], 1.0, Boundary::Free)).unwrap();
        assert_eq!(free.matrix.cols(), 12);
        assert_eq!(free.matrix.rows(), 2 * 4 + 3 * 3);
        let zero = build_operator(&OperatorSpec::new(Family::Grad2D, &[1, 2], 1.0, Boundary::ZeroBoundary)).unwrap();
        assert_eq!(zero.matrix.cols(), 2);
        assert_eq!(zero.matrix.rows(), free.matrix.rows());
        assert_eq!(kernel_basis(&zero.matrix, DEFAULT_RANK_TOL).unwrap().dim(), 0);
    }

    #[test]
    fn pair_inclusion_1d() {
        let pair = operator_pair(&OperatorSpec::new(Family::Grad1D, &[5], 1.0, Boundary::Free)).unwrap();
        assert_eq!(pair.inclusion.dim(), 3);
        assert_eq!(pair.inclusion.ambient_dim(), 5);
        let ce = pair.free.matrix.matrix() * pair.inclusion.basis();
        assert_eq!(&ce, pair.zero_boundary.matrix.matrix());
    }

    #[test]
    fn pair_rejects_unsupported() {
        assert!(matches!(
            operator_pair(&OperatorSpec::new(Family::Curl3D, &[3, 3, 3], 1.0, Boundary::Free)),
            Err(Error::Capability(_))
        ));
        assert!(operator_pair(&OperatorSpec::new(Family::Grad1D, &[2], 1.0, Boundary::Free)).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(build_operator(&OperatorSpec::new(Family::Grad2D, &[3], 1.0, Boundary::Free)).is_err());
        assert!(build_operator(&OperatorSpec::new(Family::Grad1D, &[3], 0.0, Boundary::Free)).is_err());
        assert!(build_operator(&OperatorSpec::new(Family::Grad1D, &[1], 1.0, Boundary::Free)).is_err());
        assert!(build_operator(&OperatorSpec::new(Family::Curl3D, &[2, 2, 2], 1.0, Boundary::ZeroBoundary)).is_err());
        let missing = OperatorSpec::custom("/nonexistent.mtx");
        assert_eq!(build_operator(&missing).unwrap_err().code(), "io_error");
    }

    #[test]
    fn divergence_is_negative_transpose() {
        let op = build_operator(&OperatorSpec::new(Family::Grad2D, &[3, 3], 0.5, Boundary::Free)).unwrap();
        let div = op.divergence();
        assert_eq!(div.matrix(), &(-op.matrix.matrix().transpose()));
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let h = 1.0;
        let grad = build_operator(&OperatorSpec::new(Family::Grad3D, &[3, 3, 3], h, Boundary::Free)).unwrap();
        let curl = build_operator(&OperatorSpec::new(Family::Curl3D, &[3, 3, 3], h, Boundary::Free)).unwrap();
        assert_eq!(curl.matrix.cols(), grad.matrix.rows());
        let prod = curl.matrix.matrix() * grad.matrix.matrix();
        assert_eq!(prod.amax(), 0.0);
    }

    #[test]
    fn sym_grad_rigid_motions_in_kernel() {
        let op = build_operator(&OperatorSpec::new(Family::SymGrad2D, &[3, 3], 1.0, Boundary::Free)).unwrap();
        let n = 9;
        let mut rot = DVector::zeros(2 * n);
        for j in 0..3 {
            for i in 0..3 {
                rot[i + 3 * j] = -(j as f64);
                rot[n + i + 3 * j] = i as f64;
            }
        }
        assert!(op.matrix.apply(&rot).unwrap().amax() < 1e-14);
        let shift = DVector::from_fn(2 * n, |k, _| if k < n { 1.0 } else { 0.0 });
        assert!(op.matrix.apply(&shift).unwrap().amax() < 1e-14);
    }
}
