//! Benchmark PDEs: operators, manufactured or reference solutions, clause
//! geometry, collocation sampling and the training objective.

mod cavity;
mod helmholtz;
mod klein_gordon;
mod objective;
mod sampling;

use serde::{Deserialize, Serialize};

pub use cavity::{cavity_residual, Cavity};
pub use helmholtz::{helmholtz_exact, helmholtz_forcing, Helmholtz};
pub use klein_gordon::{kg_exact, kg_forcing, KleinGordon};
pub use objective::{loss_breakdown, Evaluation, Objective};
pub use sampling::{sample_points, PointBatch};

use crate::autodiff::{Jet2, Scalar};
use crate::error::{Error, Result};
use crate::weighting::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Helmholtz,
    Kg,
    Cavity,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Helmholtz => "helmholtz",
            ProblemId::Kg => "kg",
            ProblemId::Cavity => "cavity",
        }
    }
}

impl std::str::FromStr for ProblemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "helmholtz" => Ok(ProblemId::Helmholtz),
            "kg" | "klein-gordon" => Ok(ProblemId::Kg),
            "cavity" => Ok(ProblemId::Cavity),
            _ => Err(Error::contract(format!("unknown problem '{s}'"))),
        }
    }
}

/// Whether an edge carries boundary or initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseKind {
    Boundary,
    Initial,
}

/// A straight edge of the domain box: coordinate `axis` is pinned to `at`,
/// the other coordinate ranges over `free`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub name: &'static str,
    pub axis: usize,
    pub at: f64,
    pub free: (f64, f64),
    pub kind: ClauseKind,
}

/// Collocation counts: interior residual points, boundary points (split
/// evenly over the boundary edges) and initial points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub n_r: usize,
    pub n_bc: usize,
    pub n_ic: usize,
}

/// The differential problem, dispatching to its operator definitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum Pde {
    Helmholtz(Helmholtz),
    Kg(KleinGordon),
    Cavity(Cavity),
}

impl Pde {
    pub fn id(&self) -> ProblemId {
        match self {
            Pde::Helmholtz(_) => ProblemId::Helmholtz,
            Pde::Kg(_) => ProblemId::Kg,
            Pde::Cavity(_) => ProblemId::Cavity,
        }
    }

    pub fn input_dim(&self) -> usize {
        2
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Pde::Cavity(_) => 3,
            _ => 1,
        }
    }

    pub fn domain(&self) -> [(f64, f64); 2] {
        match self {
            Pde::Helmholtz(_) => [(-1.0, 1.0), (-1.0, 1.0)],
            Pde::Kg(_) | Pde::Cavity(_) => [(0.0, 1.0), (0.0, 1.0)],
        }
    }

    /// Second-derivative pairs the residual operator reads.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (1, 1)]
    }

    pub fn terms(&self) -> Vec<Term> {
        match self {
            Pde::Kg(_) => vec![Term::Ic, Term::Bc, Term::R],
            _ => vec![Term::Bc, Term::R],
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        match self {
            Pde::Helmholtz(_) => helmholtz::EDGES.to_vec(),
            Pde::Kg(_) => klein_gordon::EDGES.to_vec(),
            Pde::Cavity(_) => cavity::EDGES.to_vec(),
        }
    }

    pub fn boundary_edges(&self) -> Vec<Edge> {
        self.edges()
            .into_iter()
            .filter(|e| e.kind == ClauseKind::Boundary)
            .collect()
    }

    pub fn initial_edge(&self) -> Option<Edge> {
        self.edges()
            .into_iter()
            .find(|e| e.kind == ClauseKind::Initial)
    }

    /// Residual components at `x` given jets of every network output.
    pub fn residual<S: Scalar>(&self, outs: &[Jet2<S>], x: &[f64]) -> Vec<S> {
        match self {
            Pde::Helmholtz(h) => vec![h.residual(&outs[0], x)],
            Pde::Kg(k) => vec![k.residual(&outs[0], x)],
            Pde::Cavity(c) => {
                let (a, b, d) = cavity_residual(&outs[0], &outs[1], &outs[2], c.re);
                vec![a, b, d]
            }
        }
    }

    /// Squared boundary mismatch at a point of boundary edge `edge`.
    pub fn boundary_mismatch<S: Scalar>(&self, outs: &[Jet2<S>], x: &[f64], edge: usize) -> S {
        let targets = self.boundary_target(x, edge);
        outs.iter()
            .zip(&targets)
            .map(|(o, &t)| (o.value - t).square())
            .reduce(|a, b| a + b)
            .expect("at least one constrained output")
    }

    /// Boundary targets for the constrained outputs (leading outputs).
    pub fn boundary_target(&self, x: &[f64], edge: usize) -> Vec<f64> {
        match self {
            Pde::Helmholtz(_) => vec![0.0],
            Pde::Kg(_) => vec![kg_exact(x[0], x[1])],
            Pde::Cavity(_) => cavity::lid_target(edge).to_vec(),
        }
    }

    /// Squared initial mismatch (value and time derivative), if the problem
    /// has initial data.
    pub fn initial_mismatch<S: Scalar>(&self, outs: &[Jet2<S>], x: &[f64]) -> Option<S> {
        match self {
            Pde::Kg(_) => {
                let (g1, g2) = klein_gordon::initial_targets(x[0]);
                let u = &outs[0];
                Some((u.value - g1).square() + (u.grad[1] - g2).square())
            }
            _ => None,
        }
    }

    /// Points where a scalar gauge is pinned: `(point, output, target)`.
    pub fn anchors(&self) -> Vec<([f64; 2], usize, f64)> {
        match self {
            Pde::Cavity(_) => vec![([0.5, 0.5], 2, 0.0)],
            _ => Vec::new(),
        }
    }

    /// Closed-form solution, when one exists.
    pub fn exact(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Pde::Helmholtz(h) => Some(vec![helmholtz_exact(x[0], x[1], h.a1, h.a2)]),
            Pde::Kg(_) => Some(vec![kg_exact(x[0], x[1])]),
            Pde::Cavity(_) => None,
        }
    }

    /// Forcing term of a scalar problem.
    pub fn forcing(&self, x: &[f64]) -> Option<f64> {
        match self {
            Pde::Helmholtz(h) => Some(helmholtz_forcing(x[0], x[1], h.a1, h.a2, h.k)),
            Pde::Kg(_) => Some(kg_forcing(x[0], x[1])),
            Pde::Cavity(_) => None,
        }
    }

    /// Differential operator applied to the network without the forcing.
    pub fn operator_lhs(&self, u: &Jet2) -> Option<f64> {
        match self {
            Pde::Helmholtz(h) => Some(h.lhs(u)),
            Pde::Kg(k) => Some(k.lhs(u)),
            Pde::Cavity(_) => None,
        }
    }

    pub fn default_counts(&self) -> SampleCounts {
        match self {
            Pde::Helmholtz(_) | Pde::Cavity(_) => SampleCounts {
                n_r: 128,
                n_bc: 512,
                n_ic: 0,
            },
            Pde::Kg(_) => SampleCounts {
                n_r: 128,
                n_bc: 256,
                n_ic: 128,
            },
        }
    }

    pub fn default_gamma(&self) -> f64 {
        match self {
            Pde::Kg(_) => 1e6,
            _ => 100.0,
        }
    }

    pub fn for_id(id: ProblemId) -> Self {
        match id {
            ProblemId::Helmholtz => Pde::Helmholtz(Helmholtz::default()),
            ProblemId::Kg => Pde::Kg(KleinGordon::default()),
            ProblemId::Cavity => Pde::Cavity(Cavity::default()),
        }
    }
}

/// A problem with its sampling configuration and default weight cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub pde: Pde,
    pub counts: SampleCounts,
    pub gamma: f64,
}

impl ProblemSpec {
    pub fn new(pde: Pde) -> Self {
        Self {
            counts: pde.default_counts(),
            gamma: pde.default_gamma(),
            pde,
        }
    }

    pub fn for_id(id: ProblemId) -> Self {
        Self::new(Pde::for_id(id))
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.counts;
        let edges = self.pde.boundary_edges().len();
        if c.n_r == 0 || c.n_bc == 0 {
            return Err(Error::contract(
                "interior and boundary counts must be at least 1",
            ));
        }
        if c.n_bc % edges != 0 {
            return Err(Error::contract(format!(
                "{} boundary points cannot be split evenly over {edges} edges",
                c.n_bc
            )));
        }
        if self.pde.initial_edge().is_some() && c.n_ic == 0 {
            return Err(Error::contract("problem has initial data but n_ic is 0"));
        }
        Ok(())
    }
}

/// `n` evenly spaced values covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Uniform `n x n` evaluation grid, row-major in `(x, y)` with `y` fastest.
/// Cavity grids exclude the walls.
pub fn evaluation_grid(pde: &Pde, n: usize) -> Vec<f64> {
    let [(x0, x1), (y0, y1)] = pde.domain();
    let (xs, ys) = match pde {
        Pde::Cavity(_) => {
            let interior = |lo: f64, hi: f64| -> Vec<f64> {
                (1..=n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
                    .collect()
            };
            (interior(x0, x1), interior(y0, y1))
        }
        _ => (linspace(x0, x1, n), linspace(y0, y1, n)),
    };
    let mut pts = Vec::with_capacity(2 * n * n);
    for &x in &xs {
        for &y in &ys {
            pts.push(x);
            pts.push(y);
        }
    }
    pts
}
