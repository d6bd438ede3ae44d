use serde::{Deserialize, Serialize};

use super::{ClauseKind, Edge};
use crate::autodiff::{Jet2, Scalar};

/// Steady incompressible Navier-Stokes in the unit square with a lid
/// moving at unit speed along the top wall. Outputs are `(u, v, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cavity {
    pub re: f64,
}

impl Default for Cavity {
    fn default() -> Self {
        Self { re: 100.0 }
    }
}

/// Offset keeping boundary samples away from the two lid corners, where the
/// wall velocity is discontinuous.
pub const CORNER_OFFSET: f64 = 1e-6;

pub(super) const LID: usize = 3;

pub(super) const EDGES: [Edge; 4] = [
    Edge {
        name: "bottom",
        axis: 1,
        at: 0.0,
        free: (0.0, 1.0),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "left",
        axis: 0,
        at: 0.0,
        free: (0.0, 1.0 - CORNER_OFFSET),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "right",
        axis: 0,
        at: 1.0,
        free: (0.0, 1.0 - CORNER_OFFSET),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "lid",
        axis: 1,
        at: 1.0,
        free: (CORNER_OFFSET, 1.0 - CORNER_OFFSET),
        kind: ClauseKind::Boundary,
    },
];

pub(super) fn lid_target(edge: usize) -> [f64; 2] {
    if edge == LID {
        [1.0, 0.0]
    } else {
        [0.0, 0.0]
    }
}

/// Momentum (x, y) and continuity residuals. Jets must carry `(0,0)` and
/// `(1,1)` second derivatives in that order.
pub fn cavity_residual<S: Scalar>(u: &Jet2<S>, v: &Jet2<S>, p: &Jet2<S>, re: f64) -> (S, S, S) {
    let inv_re = 1.0 / re;
    let (ux, uy) = (u.grad[0], u.grad[1]);
    let (vx, vy) = (v.grad[0], v.grad[1]);
    let lap_u = u.second[0] + u.second[1];
    let lap_v = v.second[0] + v.second[1];
    let mom_x = u.value * ux + v.value * uy + p.grad[0] - lap_u * inv_re;
    let mom_y = u.value * vx + v.value * vy + p.grad[1] - lap_v * inv_re;
    let cont = ux + vy;
    (mom_x, mom_y, cont)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIRS: [(usize, usize); 2] = [(0, 0), (1, 1)];

    #[test]
    fn quiescent_field() {
        let z = Jet2::constant(0.0, 2, &PAIRS);
        assert_eq!(cavity_residual(&z, &z, &z, 100.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn shear_flow() {
        let u = Jet2::variable(0.4, 1, 2, &PAIRS);
        let z = Jet2::constant(0.0, 2, &PAIRS);
        for re in [0.01, 1.0, 100.0] {
            let (mx, _, c) = cavity_residual(&u, &z, &z, re);
            assert_eq!((mx, c), (0.0, 0.0));
        }
    }
}
