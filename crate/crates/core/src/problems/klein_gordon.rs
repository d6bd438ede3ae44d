use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ClauseKind, Edge};
use crate::autodiff::{Jet2, Scalar};

/// `u_tt + alpha u_xx + beta u + gamma u^power = f` on `(x, t) in [0, 1]^2`
/// with manufactured solution `x cos(5 pi t) + (x t)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KleinGordon {
    pub alpha: f64,
    pub beta: f64,
    /// Coefficient of the nonlinear term (not the weight cap).
    pub nonlinear: f64,
    pub power: i32,
}

impl Default for KleinGordon {
    fn default() -> Self {
        Self {
            alpha: -1.0,
            beta: 0.0,
            nonlinear: 1.0,
            power: 3,
        }
    }
}

pub(super) const EDGES: [Edge; 3] = [
    Edge {
        name: "x=0",
        axis: 0,
        at: 0.0,
        free: (0.0, 1.0),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "x=1",
        axis: 0,
        at: 1.0,
        free: (0.0, 1.0),
        kind: ClauseKind::Boundary,
    },
    Edge {
        name: "t=0",
        axis: 1,
        at: 0.0,
        free: (0.0, 1.0),
        kind: ClauseKind::Initial,
    },
];

pub fn kg_exact(x: f64, t: f64) -> f64 {
    x * (5.0 * PI * t).cos() + (x * t).powi(3)
}

fn exact_derivatives(x: f64, t: f64) -> (f64, f64, f64) {
    let u = kg_exact(x, t);
    let u_tt = -25.0 * PI * PI * x * (5.0 * PI * t).cos() + 6.0 * x.powi(3) * t;
    let u_xx = 6.0 * x * t.powi(3);
    (u, u_xx, u_tt)
}

/// Forcing for the default coefficients: `u_tt - u_xx + u^3`.
pub fn kg_forcing(x: f64, t: f64) -> f64 {
    KleinGordon::default().forcing(x, t)
}

/// `(u(x, 0), u_t(x, 0))` of the manufactured solution.
pub(super) fn initial_targets(x: f64) -> (f64, f64) {
    (x, 0.0)
}

impl KleinGordon {
    pub fn forcing(&self, x: f64, t: f64) -> f64 {
        let (u, u_xx, u_tt) = exact_derivatives(x, t);
        u_tt + self.alpha * u_xx + self.beta * u + self.nonlinear * u.powi(self.power)
    }

    pub fn lhs(&self, u: &Jet2) -> f64 {
        u.second[1]
            + self.alpha * u.second[0]
            + self.beta * u.value
            + self.nonlinear * u.value.powi(self.power)
    }

    pub fn residual<S: Scalar>(&self, u: &Jet2<S>, x: &[f64]) -> S {
        let f = self.forcing(x[0], x[1]);
        u.second[1]
            + u.second[0] * self.alpha
            + u.value * self.beta
            + u.value.powi(self.power) * self.nonlinear
            - f
    }
}
