//! WebAssembly bindings for the static demo page in `www/`.

use ipinn::harness::{ModelKind, RunConfig, Truth};
use ipinn::network::{init_params, NetworkDef};
use ipinn::optim::AdamState;
use ipinn::problems::{sample_points, Objective, PointBatch, ProblemId, ProblemSpec};
use ipinn::refcavity::solve_cavity_fd;
use ipinn::weighting::{lambdas, Scheme, WeightState};
use wasm_bindgen::prelude::*;

fn js(e: ipinn::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Rows of `[s, lambda_aw, lambda_iaw]` for `n` raw uncertainties spread
/// over `[s_min, s_max]`, flattened.
#[wasm_bindgen]
pub fn weight_curve(gamma: f64, s_min: f64, s_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let n = n.max(2);
    let raw: Vec<f64> = (0..n)
        .map(|k| s_min + (s_max - s_min) * k as f64 / (n - 1) as f64)
        .collect();
    let aw = lambdas(Scheme::Aw, gamma, &raw, &[]).map_err(js)?;
    let iaw = lambdas(Scheme::Iaw, gamma, &raw, &[]).map_err(js)?;
    Ok((0..n).flat_map(|k| [raw[k], aw[k], iaw[k]]).collect())
}

/// Steady cavity on an `n x n` grid. Returns `[iterations, residual, u..., v...]`
/// with `u[j*n + i]` at `x = i/(n-1)`, `y = j/(n-1)`.
#[wasm_bindgen]
pub fn cavity(re: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let f = solve_cavity_fd(re, n, 1e-7, 100_000).map_err(js)?;
    let mut out = vec![f.iterations as f64, f.residual];
    out.extend_from_slice(&f.u);
    out.extend_from_slice(&f.v);
    Ok(out)
}

/// Helmholtz training session stepped from JavaScript.
#[wasm_bindgen]
pub struct Trainer {
    spec: ProblemSpec,
    def: NetworkDef,
    batch: PointBatch,
    weights: WeightState,
    config: RunConfig,
    adam: AdamState,
    theta: Vec<f64>,
    truth: Truth,
    steps: usize,
    last_loss: f64,
}

#[wasm_bindgen]
impl Trainer {
    #[wasm_bindgen(constructor)]
    pub fn new(
        model: &str,
        layers: usize,
        units: usize,
        seed: u64,
        grid: usize,
    ) -> Result<Trainer, JsError> {
        let model: ModelKind = model.parse().map_err(js)?;
        let mut cfg = RunConfig::new(ProblemId::Helmholtz, model, layers, units, 0, seed);
        cfg.grid = grid;
        let spec = cfg.problem_spec().map_err(js)?;
        let def = cfg.network(&spec).map_err(js)?;
        let weights =
            WeightState::build(model.scheme(), &spec.pde.terms(), spec.gamma).map_err(js)?;
        let batch = sample_points(&spec, spec.counts, cfg.sampling_seed()).map_err(js)?;
        let mut theta = init_params(&def, seed).values;
        theta.extend_from_slice(&weights.raw);
        let truth = Truth::for_problem(&spec.pde, grid, None).map_err(js)?;
        let adam = AdamState::new(cfg.adam, theta.len());
        Ok(Trainer {
            spec,
            def,
            batch,
            weights,
            config: cfg,
            adam,
            theta,
            truth,
            steps: 0,
            last_loss: f64::NAN,
        })
    }

    /// Runs `n` Adam steps and returns the last total loss.
    pub fn step(&mut self, n: usize) -> Result<f64, JsError> {
        for _ in 0..n {
            if self.steps > 0
                && self.config.batch_seed(self.steps) != self.config.batch_seed(self.steps - 1)
            {
                self.batch = sample_points(
                    &self.spec,
                    self.spec.counts,
                    self.config.batch_seed(self.steps),
                )
                .map_err(js)?;
            }
            let obj =
                Objective::new(&self.spec, &self.def, &self.batch, &self.weights).map_err(js)?;
            let e = obj.evaluate(&self.theta).map_err(js)?;
            self.adam.step(&mut self.theta, &e.grad).map_err(js)?;
            self.last_loss = e.total;
            self.steps += 1;
        }
        Ok(self.last_loss)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Current loss multipliers, one per term.
    pub fn lambdas(&self) -> Result<Vec<f64>, JsError> {
        let n = self.def.param_count();
        lambdas(
            self.weights.scheme,
            self.weights.gamma,
            &self.theta[n..],
            &self.weights.fixed_lambdas,
        )
        .map_err(js)
    }

    /// `[rel_l2, exact..., predicted...]` on the evaluation grid.
    pub fn field(&self) -> Result<Vec<f64>, JsError> {
        let n = self.def.param_count();
        let (m, pred) = self
            .truth
            .metrics(&self.spec.pde, &self.def, &self.theta[..n])
            .map_err(js)?;
        let mut out = vec![m.rel_l2];
        out.extend_from_slice(&self.truth.fields[0]);
        out.extend_from_slice(&pred[0]);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rows() {
        let rows = weight_curve(100.0, -10.0, 10.0, 3).unwrap();
        assert_eq!(rows.len(), 9);
        assert!((rows[1] - 0.5 * (10f64).exp()).abs() < 1e-6);
        assert!(rows[2] <= 100.0);
    }

    #[test]
    fn trainer_steps() {
        let mut t = Trainer::new("ipinn", 2, 6, 1, 10).unwrap();
        let first = t.step(1).unwrap();
        t.step(30).unwrap();
        assert_eq!(t.steps(), 31);
        assert!(first.is_finite() && t.step(1).unwrap().is_finite());
        assert_eq!(t.field().unwrap().len(), 1 + 2 * 100);
        assert_eq!(t.lambdas().unwrap().len(), 2);
    }
}
