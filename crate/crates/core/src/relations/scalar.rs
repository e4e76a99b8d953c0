use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step tolerance of the scalar root finder, relative to the iterate.
pub const SCALAR_ROOT_TOL: f64 = 1e-14;

/// A maximal monotone graph `β ⊆ ℝ × ℝ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarGraph {
    /// `s ↦ m·s`, `m ≥ 0`.
    Linear { slope: f64 },
    /// `s ↦ sgn(s)` with `β(0) = [-1, 1]`.
    Sign,
    /// `s ↦ |s|^{p-2} s`, `p > 1`.
    Power { p: f64 },
    /// Saturation `s ↦ min(max(s, lo), hi)`.
    Clamp { lo: f64, hi: f64 },
    /// Heaviside relay: `0` for `s < 0`, `h` for `s > 0`, `[0, h]` at `0`.
    Relay { height: f64 },
}

impl ScalarGraph {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarGraph::Linear { slope } => slope.is_finite() && slope >= 0.0,
            ScalarGraph::Sign => true,
            ScalarGraph::Power { p } => p.is_finite() && p > 1.0,
            ScalarGraph::Clamp { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            ScalarGraph::Relay { height } => height.is_finite() && height >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Construction(format!("invalid scalar graph {self:?}")))
        }
    }

    /// The set `β(s)` as a closed interval.
    pub fn values_at(&self, s: f64) -> (f64, f64) {
        match *self {
            ScalarGraph::Linear { slope } => (slope * s, slope * s),
            ScalarGraph::Sign => {
                if s > 0.0 {
                    (1.0, 1.0)
                } else if s < 0.0 {
                    (-1.0, -1.0)
                } else {
                    (-1.0, 1.0)
                }
            }
            ScalarGraph::Power { p } => {
                let v = s.abs().powf(p - 1.0) * s.signum();
                (v, v)
            }
            ScalarGraph::Clamp { lo, hi } => {
                let v = s.clamp(lo, hi);
                (v, v)
            }
            ScalarGraph::Relay { height } => {
                if s > 0.0 {
                    (height, height)
                } else if s < 0.0 {
                    (0.0, 0.0)
                } else {
                    (0.0, height)
                }
            }
        }
    }

    /// The unique `s` with `s + μβ(s) ∋ z`.
    pub fn resolvent(&self, mu: f64, z: f64) -> f64 {
        match *self {
            ScalarGraph::Linear { slope } => z / (1.0 + mu * slope),
            ScalarGraph::Sign => {
                if z > mu {
                    z - mu
                } else if z < -mu {
                    z + mu
                } else {
                    0.0
                }
            }
            ScalarGraph::Power { p } => z.signum() * power_root(mu, p, z.abs()),
            ScalarGraph::Clamp { lo, hi } => {
                if z < lo * (1.0 + mu) {
                    z - mu * lo
                } else if z > hi * (1.0 + mu) {
                    z - mu * hi
                } else {
                    z / (1.0 + mu)
                }
            }
            ScalarGraph::Relay { height } => {
                if z > mu * height {
                    z - mu * height
                } else if z < 0.0 {
                    z
                } else {
                    0.0
                }
            }
        }
    }
}

/// Solves `s + μ s^{p-1} = t` for `t ≥ 0` by Newton's method safeguarded with
/// bisection on the bracket `[0, t]`.
fn power_root(mu: f64, p: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let g = |s: f64| s + mu * s.powf(p - 1.0) - t;
    let (mut lo, mut hi) = (0.0_f64, t);
    let mut s = t / (1.0 + mu);
    for _ in 0..400 {
        let gs = g(s);
        if gs == 0.0 {
            return s;
        }
        if gs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let dg = 1.0 + mu * (p - 1.0) * s.powf(p - 2.0);
        let newton = s - gs / dg;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - s).abs();
        s = next;
        if step <= SCALAR_ROOT_TOL * s || hi - lo <= SCALAR_ROOT_TOL * hi {
            break;
        }
    }
    s
}
