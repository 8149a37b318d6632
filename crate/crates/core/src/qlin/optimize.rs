//! CHSH maximisation over xy-plane measurement directions.

use std::f64::consts::PI;

use serde::Serialize;

use super::{pauli_x, pauli_y, quantum_box_xy, QState};
use crate::{Error, Result};

/// Best angles found by [`maximize_chsh`] and the CHSH value of the
/// corresponding quantum box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshOptimum {
    /// `[α, α', β, β']` in radians.
    pub angles: [f64; 4],
    pub chsh: f64,
}

/// `T[i][j] = ⟨ψ|σ_i ⊗ σ_j|ψ⟩` for `i, j ∈ {x, y}`.
///
/// With xy-plane observables `C(α, β) = Σ n_i(α) T[i][j] n_j(β)` where
/// `n(θ) = (cos θ, sin θ)`.
pub fn correlation_tensor(state: &QState) -> Result<[[f64; 2]; 2]> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: 4,
        });
    }
    let paulis = [pauli_x(), pauli_y()];
    let mut t = [[0.0; 2]; 2];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            t[i][j] = si.kron(sj)?.expectation(state)?.re;
        }
    }
    Ok(t)
}

struct Objective {
    t: [[f64; 2]; 2],
}

impl Objective {
    fn corr(&self, alpha: f64, beta: f64) -> f64 {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        ca * (self.t[0][0] * cb + self.t[0][1] * sb) + sa * (self.t[1][0] * cb + self.t[1][1] * sb)
    }

    /// `|S|` with `α = 0` and `v = [α', β, β']`.
    fn abs_chsh(&self, v: [f64; 3]) -> f64 {
        let [ap, b, bp] = v;
        (self.corr(0.0, b) + self.corr(0.0, bp) + self.corr(ap, b) - self.corr(ap, bp)).abs()
    }
}

const GRID: usize = 360;
const REFINE_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 200;

/// Largest CHSH value reachable on `state` with xy-plane spin measurements.
///
/// Alice's first direction is pinned to the x axis. In the plane the
/// optimum only depends on the Frobenius norm of the correlation tensor
/// restricted to two orthonormal directions, which any rotation of Alice's
/// pair preserves, so nothing is lost. The remaining three angles are
/// searched on a 1° grid and then polished by coordinate-wise
/// golden-section search until a sweep stops improving. The procedure is
/// deterministic.
pub fn maximize_chsh(state: &QState) -> Result<ChshOptimum> {
    let obj = Objective {
        t: correlation_tensor(state)?,
    };

    let step = 2.0 * PI / GRID as f64;
    let grid: Vec<f64> = (0..GRID).map(|k| k as f64 * step).collect();
    // C(0, β) for every grid β, and C(α', β) for every grid pair
    let first: Vec<f64> = grid.iter().map(|&b| obj.corr(0.0, b)).collect();
    let table: Vec<f64> = grid
        .iter()
        .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
        .map(|(a, b)| obj.corr(a, b))
        .collect();

    let mut best = (f64::NEG_INFINITY, [0usize; 3]);
    for i in 0..GRID {
        let row = &table[i * GRID..(i + 1) * GRID];
        for j in 0..GRID {
            let fixed = first[j] + row[j];
            for k in 0..GRID {
                let s = (fixed + first[k] - row[k]).abs();
                if s > best.0 {
                    best = (s, [i, j, k]);
                }
            }
        }
    }

    let mut v = best.1.map(|k| grid[k]);
    let mut value = obj.abs_chsh(v);
    for _ in 0..MAX_SWEEPS {
        let before = value;
        for coord in 0..3 {
            let centre = v[coord];
            let (x, fx) = golden_section_max(centre - step, centre + step, |t| {
                let mut w = v;
                w[coord] = t;
                obj.abs_chsh(w)
            });
            if fx > value {
                v[coord] = x;
                value = fx;
            }
        }
        if value - before <= 1e-15 {
            break;
        }
    }

    let angles = [0.0, v[0], v[1], v[2]].map(wrap_angle);
    let chsh = quantum_box_xy(state, angles)?.chsh_value();
    Ok(ChshOptimum { angles, chsh })
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn golden_section_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > REFINE_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
