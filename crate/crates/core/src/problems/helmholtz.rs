use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ClauseKind, Edge};
use crate::autodiff::{Jet2, Scalar};

/// `u_xx + u_yy + k^2 u = q` on `[-1, 1]^2` with homogeneous Dirichlet
/// walls and manufactured solution `sin(a1 pi x) sin(a2 pi y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Helmholtz {
    pub a1: f64,
    pub a2: f64,
    pub k: f64,
}

impl Default for Helmholtz {
    fn default() -> Self {
        Self {
            a1: 1.0,
            a2: 4.0,
            k: 1.0,
        }
    }
}

pub(super) const EDGES: [Edge; 4] = [
    Edge {
        name: "x=-1",
        axis: 0,
        at: -1.0,
        free: (-1.0, 1.0),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "x=1",
        axis: 0,
        at: 1.0,
        free: (-1.0, 1.0),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "y=-1",
        axis: 1,
        at: -1.0,
        free: (-1.0, 1.0),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "y=1",
        axis: 1,
        at: 1.0,
        free: (-1.0, 1.0),
        kind: ClauseKind::Boundary,
    },
];

pub fn helmholtz_exact(x: f64, y: f64, a1: f64, a2: f64) -> f64 {
    (a1 * PI * x).sin() * (a2 * PI * y).sin()
}

/// Forcing obtained by applying the operator (with `k^2 u`) to the exact
/// solution.
pub fn helmholtz_forcing(x: f64, y: f64, a1: f64, a2: f64, k: f64) -> f64 {
    let u = helmholtz_exact(x, y, a1, a2);
    -(a1 * PI).powi(2) * u - (a2 * PI).powi(2) * u + k * k * u
}

impl Helmholtz {
    pub fn lhs(&self, u: &Jet2) -> f64 {
        u.second[0] + u.second[1] + self.k * self.k * u.value
    }

    pub fn residual<S: Scalar>(&self, u: &Jet2<S>, x: &[f64]) -> S {
        let q = helmholtz_forcing(x[0], x[1], self.a1, self.a2, self.k);
        u.second[0] + u.second[1] + u.value * (self.k * self.k) - q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walls_vanish() {
        for t in [-1.0, -0.3, 0.0, 0.77, 1.0] {
            for (x, y) in [(-1.0, t), (1.0, t), (t, -1.0), (t, 1.0)] {
                assert!(helmholtz_exact(x, y, 1.0, 4.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hand_evaluated_point() {
        // u(0.5, 0.125) = sin(pi/2) sin(pi/2) = 1, q = 1 - 17 pi^2
        assert!((helmholtz_exact(0.5, 0.125, 1.0, 4.0) - 1.0).abs() < 1e-15);
        let q = helmholtz_forcing(0.5, 0.125, 1.0, 4.0, 1.0);
        assert!((q - (1.0 - 17.0 * PI * PI)).abs() < 1e-12);
        assert!((q + 166.7833).abs() < 1e-3);
    }

    #[test]
    fn zero_frequencies() {
        assert_eq!(helmholtz_exact(0.3, -0.2, 0.0, 0.0), 0.0);
        assert_eq!(helmholtz_forcing(0.3, -0.2, 0.0, 0.0, 3.0), 0.0);
    }
}
