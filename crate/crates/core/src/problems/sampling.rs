use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, ProblemSpec, SampleCounts};
use crate::error::Result;

/// Collocation points for one run. Coordinates are row-major `(n, 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointBatch {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
    /// Index into the problem's boundary edges for every boundary point.
    pub boundary_edge: Vec<usize>,
    pub initial: Vec<f64>,
    pub seed: u64,
}

impl PointBatch {
    pub fn n_interior(&self) -> usize {
        self.interior.len() / 2
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_edge.len()
    }

    pub fn n_initial(&self) -> usize {
        self.initial.len() / 2
    }
}

fn sample_edge(rng: &mut ChaCha8Rng, edge: &Edge, n: usize, out: &mut Vec<f64>) {
    for _ in 0..n {
        let s = rng.random_range(edge.free.0..=edge.free.1);
        let mut p = [0.0; 2];
        p[edge.axis] = edge.at;
        p[1 - edge.axis] = s;
        out.extend_from_slice(&p);
    }
}

/// Uniform interior points, equal per-edge boundary counts, uniform initial
/// points. Deterministic per seed.
pub fn sample_points(spec: &ProblemSpec, counts: SampleCounts, seed: u64) -> Result<PointBatch> {
    let spec = ProblemSpec {
        counts,
        ..spec.clone()
    };
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = spec.pde.domain();
    let mut interior = Vec::with_capacity(2 * counts.n_r);
    for _ in 0..counts.n_r {
        for &(lo, hi) in &domain {
            interior.push(rng.random_range(lo..hi));
        }
    }
    let edges = spec.pde.boundary_edges();
    let per_edge = counts.n_bc / edges.len();
    let mut boundary = Vec::with_capacity(2 * counts.n_bc);
    let mut boundary_edge = Vec::with_capacity(counts.n_bc);
    for (k, edge) in edges.iter().enumerate() {
        sample_edge(&mut rng, edge, per_edge, &mut boundary);
        boundary_edge.extend(std::iter::repeat_n(k, per_edge));
    }
    let mut initial = Vec::new();
    if let Some(edge) = spec.pde.initial_edge() {
        sample_edge(&mut rng, &edge, counts.n_ic, &mut initial);
    }
    Ok(PointBatch {
        interior,
        boundary,
        boundary_edge,
        initial,
        seed,
    })
}
