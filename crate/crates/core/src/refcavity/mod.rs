//! Finite-difference reference solution for the lid-driven cavity.
//!
//! Streamfunction-vorticity form on a uniform `n x n` node grid over the unit
//! square, second-order central differences, and point SOR on both
//! equations with Thom's wall vorticity.

mod io;

pub use io::{
    benchmark_re100, load_centerline, load_reference, write_centerline, write_reference,
    CenterlineTable,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// SOR factor for the streamfunction Poisson sweep.
    pub relaxation: f64,
    /// SOR factor for the vorticity transport sweep.
    pub vorticity_relaxation: f64,
    /// Largest point update (in `h^2/4`-scaled residual form) accepted as
    /// converged.
    pub tol: f64,
    pub max_iters: usize,
    pub lid_speed: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            relaxation: 1.5,
            vorticity_relaxation: 1.0,
            tol: 1e-9,
            max_iters: 200_000,
            lid_speed: 1.0,
        }
    }
}

/// Nodal velocities. `u[j * n + i]` sits at `(coords[i], coords[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceField {
    pub n: usize,
    pub re: f64,
    pub tol: f64,
    pub iterations: usize,
    pub residual: f64,
    pub coords: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn solve_cavity_fd(re: f64, n: usize, tol: f64, max_iters: usize) -> Result<ReferenceField> {
    solve_cavity_with(
        re,
        n,
        &SolverConfig {
            tol,
            max_iters,
            ..Default::default()
        },
    )
}

pub fn solve_cavity_with(re: f64, n: usize, cfg: &SolverConfig) -> Result<ReferenceField> {
    if !(re > 0.0 && re.is_finite()) {
        return Err(Error::contract(format!(
            "Reynolds number must be positive, got {re}"
        )));
    }
    if n < 65 || n % 2 == 0 {
        return Err(Error::contract(format!(
            "grid size must be odd and at least 65, got {n}"
        )));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::contract(format!(
            "tolerance must be positive, got {}",
            cfg.tol
        )));
    }
    if !(cfg.relaxation > 0.0 && cfg.relaxation < 2.0) {
        return Err(Error::contract(format!(
            "relaxation must lie in (0, 2), got {}",
            cfg.relaxation
        )));
    }
    let h = 1.0 / (n - 1) as f64;
    let h2 = h * h;
    let w = cfg.relaxation;
    let wv = cfg.vorticity_relaxation;
    let lid = cfg.lid_speed;
    let idx = |i: usize, j: usize| j * n + i;
    let mut psi = vec![0.0; n * n];
    let mut om = vec![0.0; n * n];

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        for k in 0..n {
            om[idx(k, 0)] = -2.0 * psi[idx(k, 1)] / h2;
            om[idx(k, n - 1)] = -2.0 * psi[idx(k, n - 2)] / h2 - 2.0 * lid / h;
        }
        for k in 1..n - 1 {
            om[idx(0, k)] = -2.0 * psi[idx(1, k)] / h2;
            om[idx(n - 1, k)] = -2.0 * psi[idx(n - 2, k)] / h2;
        }
        let mut r_psi: f64 = 0.0;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = idx(i, j);
                let target =
                    0.25 * (psi[c + 1] + psi[c - 1] + psi[c + n] + psi[c - n] + h2 * om[c]);
                let d = target - psi[c];
                r_psi = r_psi.max(d.abs());
                psi[c] += w * d;
            }
        }
        let mut r_om: f64 = 0.0;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = idx(i, j);
                // u h and v h from central differences of psi
                let uh = 0.5 * (psi[c + n] - psi[c - n]);
                let vh = -0.5 * (psi[c + 1] - psi[c - 1]);
                let conv = uh * (om[c + 1] - om[c - 1]) + vh * (om[c + n] - om[c - n]);
                let target =
                    0.25 * (om[c + 1] + om[c - 1] + om[c + n] + om[c - n] - 0.5 * re * conv);
                let d = target - om[c];
                r_om = r_om.max((d * h2).abs());
                om[c] += wv * d;
            }
        }
        residual = r_psi.max(r_om);
        if !residual.is_finite() {
            return Err(Error::numeric(
                "cavity_fd",
                format!("residual {residual} after {iterations} sweeps"),
            ));
        }
        if residual < cfg.tol {
            break;
        }
    }
    if !(residual < cfg.tol) {
        return Err(Error::NonConvergence {
            iterations,
            residual,
            tol: cfg.tol,
        });
    }

    let mut u = vec![0.0; n * n];
    let mut v = vec![0.0; n * n];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let c = idx(i, j);
            u[c] = (psi[c + n] - psi[c - n]) / (2.0 * h);
            v[c] = -(psi[c + 1] - psi[c - 1]) / (2.0 * h);
        }
    }
    for i in 0..n {
        u[idx(i, n - 1)] = lid;
    }
    Ok(ReferenceField {
        n,
        re,
        tol: cfg.tol,
        iterations,
        residual,
        coords: (0..n).map(|k| k as f64 * h).collect(),
        u,
        v,
    })
}

impl ReferenceField {
    fn spacing(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let c = j * self.n + i;
        (self.u[c], self.v[c])
    }

    /// Bilinear interpolation of `(u, v)`; points outside the unit square
    /// are clamped onto it.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        let h = self.spacing();
        let locate = |s: f64| {
            let t = s.clamp(0.0, 1.0) / h;
            let k = (t.floor() as usize).min(self.n - 2);
            (k, t - k as f64)
        };
        let (i, tx) = locate(x);
        let (j, ty) = locate(y);
        let lerp = |f: &[f64]| {
            let c = j * self.n + i;
            let bottom = f[c] * (1.0 - tx) + f[c + 1] * tx;
            let top = f[c + self.n] * (1.0 - tx) + f[c + self.n + 1] * tx;
            bottom * (1.0 - ty) + top * ty
        };
        (lerp(&self.u), lerp(&self.v))
    }

    /// `u` along the vertical line `x = 0.5` as `(y, u)`.
    pub fn centerline_u(&self) -> Vec<(f64, f64)> {
        let m = self.n / 2;
        (0..self.n)
            .map(|j| (self.coords[j], self.at(m, j).0))
            .collect()
    }

    /// `v` along the horizontal line `y = 0.5` as `(x, v)`.
    pub fn centerline_v(&self) -> Vec<(f64, f64)> {
        let m = self.n / 2;
        (0..self.n)
            .map(|i| (self.coords[i], self.at(i, m).1))
            .collect()
    }

    /// Largest central-difference divergence over interior nodes.
    pub fn max_divergence(&self) -> f64 {
        let h = self.spacing();
        let n = self.n;
        let mut worst: f64 = 0.0;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = j * n + i;
                let ux = (self.u[c + 1] - self.u[c - 1]) / (2.0 * h);
                let vy = (self.v[c + n] - self.v[c - n]) / (2.0 * h);
                worst = worst.max((ux + vy).abs());
            }
        }
        worst
    }
}

/// Piecewise-linear interpolation of a profile with increasing abscissae.
pub fn interpolate_profile(profile: &[(f64, f64)], at: f64) -> f64 {
    let k = profile.partition_point(|&(s, _)| s < at);
    if k == 0 {
        return profile[0].1;
    }
    if k == profile.len() {
        return profile[k - 1].1;
    }
    let (s0, f0) = profile[k - 1];
    let (s1, f1) = profile[k];
    f0 + (f1 - f0) * (at - s0) / (s1 - s0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grid() {
        assert!(solve_cavity_fd(100.0, 64, 1e-8, 10).is_err());
        assert!(solve_cavity_fd(100.0, 33, 1e-8, 10).is_err());
        assert!(solve_cavity_fd(-1.0, 65, 1e-8, 10).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        match solve_cavity_fd(100.0, 65, 1e-9, 5) {
            Err(Error::NonConvergence {
                iterations,
                residual,
                ..
            }) => {
                assert_eq!(iterations, 5);
                assert!(residual > 1e-9);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn profile_interpolation() {
        let p = [(0.0, 0.0), (0.5, 1.0), (1.0, 3.0)];
        assert_eq!(interpolate_profile(&p, 0.25), 0.5);
        assert_eq!(interpolate_profile(&p, 0.75), 2.0);
        assert_eq!(interpolate_profile(&p, 1.5), 3.0);
    }

    #[test]
    fn coarse_field_invariants() {
        let f = solve_cavity_fd(100.0, 65, 1e-9, 100_000).unwrap();
        let n = f.n;
        for k in 0..n {
            assert_eq!(f.at(k, n - 1), (1.0, 0.0));
            assert_eq!(f.at(k, 0), (0.0, 0.0));
        }
        for k in 0..n - 1 {
            assert_eq!(f.at(0, k), (0.0, 0.0));
            assert_eq!(f.at(n - 1, k), (0.0, 0.0));
        }
        assert!(f.max_divergence() <= 10.0 * f.tol);
        // bilinear sampling reproduces nodes
        let (u, v) = f.sample(f.coords[20], f.coords[40]);
        assert_eq!((u, v), f.at(20, 40));
    }
}
