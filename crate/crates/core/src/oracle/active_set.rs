use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{pinv_solve, row_and_null_space};
use crate::error::{Error, Result};
use crate::relations::ScalarGraph;

/// Enumeration cap: at most `3^12` branch assignments.
pub const MAX_ENUMERATION_ROWS: usize = 12;

const SLACK: f64 = 1e-9;

/// One piece of a piecewise-affine scalar graph `s ↦ c·s + β(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Linear graphs have a single piece.
    Only,
    Negative,
    /// The vertical piece at a jump: `s` pinned, the output free in an interval.
    Zero,
    Positive,
    Below,
    Middle,
    Above,
}

pub type BranchAssignment = Vec<Branch>;

/// The value `t = α·s + β` on an affine piece, or a pinned `s = s₀` with
/// `t ∈ [lo, hi]` on a vertical piece, valid for `s ∈ [s_lo, s_hi]`.
enum Piece {
    Affine { alpha: f64, beta: f64, s_lo: f64, s_hi: f64 },
    Vertical { s0: f64, lo: f64, hi: f64 },
}

fn branches(g: &ScalarGraph) -> Result<&'static [Branch]> {
    use Branch::*;
    match g {
        ScalarGraph::Linear { .. } => Ok(&[Only]),
        ScalarGraph::Sign | ScalarGraph::Relay { .. } => Ok(&[Negative, Zero, Positive]),
        ScalarGraph::Clamp { .. } => Ok(&[Below, Middle, Above]),
        ScalarGraph::Power { .. } => Err(Error::Capability(
            "power graphs are not piecewise affine".into(),
        )),
    }
}

fn piece(g: &ScalarGraph, b: Branch, c: f64) -> Piece {
    use Branch::*;
    let inf = f64::INFINITY;
    match (*g, b) {
        (ScalarGraph::Linear { slope }, _) => Piece::Affine { alpha: c + slope, beta: 0.0, s_lo: -inf, s_hi: inf },
        (ScalarGraph::Sign, Negative) => Piece::Affine { alpha: c, beta: -1.0, s_lo: -inf, s_hi: 0.0 },
        (ScalarGraph::Sign, Positive) => Piece::Affine { alpha: c, beta: 1.0, s_lo: 0.0, s_hi: inf },
        (ScalarGraph::Sign, _) => Piece::Vertical { s0: 0.0, lo: -1.0, hi: 1.0 },
        (ScalarGraph::Relay { .. }, Negative) => Piece::Affine { alpha: c, beta: 0.0, s_lo: -inf, s_hi: 0.0 },
        (ScalarGraph::Relay { height }, Positive) => Piece::Affine { alpha: c, beta: height, s_lo: 0.0, s_hi: inf },
        (ScalarGraph::Relay { height }, _) => Piece::Vertical { s0: 0.0, lo: 0.0, hi: height },
        (ScalarGraph::Clamp { lo, .. }, Below) => Piece::Affine { alpha: c, beta: lo, s_lo: -inf, s_hi: lo },
        (ScalarGraph::Clamp { lo, hi }, Middle) => Piece::Affine { alpha: c + 1.0, beta: 0.0, s_lo: lo, s_hi: hi },
        (ScalarGraph::Clamp { hi, .. }, _) => Piece::Affine { alpha: c, beta: hi, s_lo: hi, s_hi: inf },
        (ScalarGraph::Power { .. }, _) => unreachable!("rejected by branches()"),
    }
}

/// Solves `A*aA ∋ (u, f)` for `a = (c·id + β) − (p, q)` with per-coordinate
/// graphs `β`, by trying every branch assignment.
///
/// Each assignment turns the inclusion into a square linear system in the
/// `N(A)^⊥` coordinates of `u` and the free outputs on vertical pieces. An
/// assignment is accepted when the system is consistent, every `s = Au + p`
/// lies on its piece, and the free outputs can be chosen inside their
/// intervals. All accepted assignments must give the same `u`.
pub fn active_set_solve(
    a: &DMatrix<f64>,
    c: f64,
    graphs: &[ScalarGraph],
    f: &DVector<f64>,
    shift: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if graphs.len() != m || f.len() != n {
        return Err(Error::Oracle(format!(
            "shape mismatch: A is {m}x{n}, {} graphs, f of length {}",
            graphs.len(),
            f.len()
        )));
    }
    if m > MAX_ENUMERATION_ROWS {
        return Err(Error::Oracle(format!(
            "{m} rows exceed the enumeration cap of {MAX_ENUMERATION_ROWS}"
        )));
    }
    let choices: Vec<&[Branch]> = graphs.iter().map(branches).collect::<Result<_>>()?;
    let zero = DVector::zeros(m);
    let (p, q) = shift.unwrap_or((&zero, &zero));
    let (v, _) = row_and_null_space(a);
    let av = a * &v;
    let r = v.ncols();
    let vf = v.tr_mul(f);
    let scale = 1.0 + f.norm() + p.norm() + q.norm();

    let mut accepted: Vec<(BranchAssignment, DVector<f64>)> = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let assignment: BranchAssignment = idx.iter().zip(&choices).map(|(&i, ch)| ch[i]).collect();
        if let Some(u) = try_assignment(&assignment, graphs, c, &v, &av, &vf, p, q, r, scale) {
            accepted.push((assignment, u));
        }
        // odometer increment
        let mut k = 0;
        while k < m {
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == m {
            break;
        }
    }

    let (_, first) = accepted
        .first()
        .ok_or_else(|| Error::Oracle("no branch assignment is consistent".into()))?;
    for (assignment, u) in &accepted[1..] {
        if (u - first).norm() > 1e-7 * (1.0 + first.norm()) {
            return Err(Error::Oracle(format!(
                "branch assignments disagree ({assignment:?} gives a different solution)"
            )));
        }
    }
    Ok(first.clone())
}

#[allow(clippy::too_many_arguments)]
fn try_assignment(
    assignment: &[Branch],
    graphs: &[ScalarGraph],
    c: f64,
    v: &DMatrix<f64>,
    av: &DMatrix<f64>,
    vf: &DVector<f64>,
    p: &DVector<f64>,
    q: &DVector<f64>,
    r: usize,
    scale: f64,
) -> Option<DVector<f64>> {
    let m = assignment.len();
    let pieces: Vec<Piece> = assignment.iter().zip(graphs).map(|(&b, g)| piece(g, b, c)).collect();
    let vertical: Vec<usize> = (0..m).filter(|&i| matches!(pieces[i], Piece::Vertical { .. })).collect();
    let k = vertical.len();

    // t = D s + e + Z τ, s = AVη + p;  Vᵀ Aᵀ (t − q) = Vᵀ f;  s_i = s0_i on vertical rows
    let mut d = DVector::zeros(m);
    let mut e = DVector::zeros(m);
    for (i, pc) in pieces.iter().enumerate() {
        if let Piece::Affine { alpha, beta, .. } = pc {
            d[i] = *alpha;
            e[i] = *beta;
        }
    }
    let dim = r + k;
    let mut sys = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    let dav = DMatrix::from_fn(m, r, |i, j| d[i] * av[(i, j)]);
    sys.view_mut((0, 0), (r, r)).copy_from(&av.tr_mul(&dav));
    for (col, &i) in vertical.iter().enumerate() {
        for j in 0..r {
            sys[(j, r + col)] = av[(i, j)];
        }
    }
    let affine_const = d.component_mul(p) + &e - q;
    rhs.rows_mut(0, r).copy_from(&(vf - av.tr_mul(&affine_const)));
    for (row, &i) in vertical.iter().enumerate() {
        for j in 0..r {
            sys[(r + row, j)] = av[(i, j)];
        }
        let s0 = match pieces[i] {
            Piece::Vertical { s0, .. } => s0,
            _ => unreachable!(),
        };
        rhs[r + row] = s0 - p[i];
    }

    let (sol, null) = pinv_solve(&sys, &rhs);
    if (&sys * &sol - &rhs).norm() > SLACK * scale {
        return None;
    }
    let eta = sol.rows(0, r).into_owned();
    let s = av * &eta + p;
    for (i, pc) in pieces.iter().enumerate() {
        let tol = SLACK * (1.0 + s[i].abs());
        let ok = match *pc {
            Piece::Affine { s_lo, s_hi, .. } => s[i] >= s_lo - tol && s[i] <= s_hi + tol,
            Piece::Vertical { s0, .. } => (s[i] - s0).abs() <= tol,
        };
        if !ok {
            return None;
        }
    }
    if k > 0 {
        let tau = sol.rows(r, k).into_owned();
        let boxes: Vec<(f64, f64)> = vertical
            .iter()
            .map(|&i| match pieces[i] {
                Piece::Vertical { lo, hi, .. } => (lo, hi),
                _ => unreachable!(),
            })
            .collect();
        // directions that move τ without changing η or the equations
        let free = null.rows(r, k).into_owned();
        if !box_reachable(&tau, &free, &boxes, scale) {
            return None;
        }
    }
    Some(v * eta)
}

/// Whether `τ + span(free)` meets the box, by alternating projections.
///
/// For polyhedral sets the distance to the box decays linearly when the two
/// sets meet, so a distance that stalls above the tolerance means they don't.
fn box_reachable(tau: &DVector<f64>, free: &DMatrix<f64>, boxes: &[(f64, f64)], scale: f64) -> bool {
    let clamp = |x: &DVector<f64>| {
        DVector::from_iterator(x.len(), x.iter().zip(boxes).map(|(&t, &(lo, hi))| t.clamp(lo, hi)))
    };
    let tol = SLACK * scale;
    let (basis, _) = row_and_null_space(&free.transpose());
    let mut x = tau.clone();
    let mut checkpoint = f64::INFINITY;
    for it in 0..200_000 {
        let y = clamp(&x);
        let dist = (&y - &x).norm();
        if dist <= tol {
            return true;
        }
        if basis.ncols() == 0 {
            return false;
        }
        if it % 200 == 0 {
            if dist > checkpoint * (1.0 - 1e-6) {
                return false;
            }
            checkpoint = dist;
        }
        // project y back onto the affine set τ + span(basis)
        x = tau + &basis * basis.tr_mul(&(y - tau));
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_zero_slope_is_least_squares() {
        let a = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0]);
        let f = DVector::from_element(3, 1.0);
        let u = active_set_solve(&a, 1.0, &[ScalarGraph::Linear { slope: 0.0 }; 4], &f, None).unwrap();
        assert_relative_eq!(u, DVector::from_vec(vec![1.5, 2.0, 1.5]), epsilon = 1e-10);
    }

    #[test]
    fn single_node_zero_branch() {
        // A = (1, −1)ᵀ, f small: u = 0 with v on the box
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let f = DVector::from_element(1, 0.5);
        let u = active_set_solve(&a, 1.0, &[ScalarGraph::Sign; 2], &f, None).unwrap();
        assert!(u[0].abs() <= 1e-12, "{u}");
    }

    #[test]
    fn single_node_active_branch() {
        // 2u + 2 = f at f = 5 → u = 1.5
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let f = DVector::from_element(1, 5.0);
        let u = active_set_solve(&a, 1.0, &[ScalarGraph::Sign; 2], &f, None).unwrap();
        assert_relative_eq!(u[0], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn clamp_branches() {
        // u + clamp(u) = f on the identity
        let a = DMatrix::identity(1, 1);
        let g = [ScalarGraph::Clamp { lo: -1.0, hi: 1.0 }];
        let solve = |f: f64| active_set_solve(&a, 1.0, &g, &DVector::from_element(1, f), None).unwrap()[0];
        assert_relative_eq!(solve(1.0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(solve(5.0), 4.0, epsilon = 1e-12);
        assert_relative_eq!(solve(-3.0), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_power_and_large_instances() {
        let a = DMatrix::identity(1, 1);
        let f = DVector::zeros(1);
        assert!(matches!(
            active_set_solve(&a, 1.0, &[ScalarGraph::Power { p: 3.0 }], &f, None),
            Err(Error::Capability(_))
        ));
        let big = DMatrix::identity(13, 13);
        assert!(active_set_solve(&big, 1.0, &[ScalarGraph::Sign; 13], &DVector::zeros(13), None).is_err());
    }
}
