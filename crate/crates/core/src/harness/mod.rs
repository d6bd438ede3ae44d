//! Training runs, metrics, and experiment matrices.

mod matrix;
mod metrics;
mod output;

pub use matrix::{
    median, run_matrix, write_summary, CellKey, CellResult, MatrixConfig, MatrixResult, OneOrMany,
};
pub use metrics::{operator_field, predict, relative_l2};
pub use output::{read_history, write_field, HistoryLog, HistoryRow};

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{init_params, ArchKind, NetworkDef, ParameterSet};
use crate::optim::{lbfgs_minimize, AdamConfig, AdamState, LbfgsConfig, Termination};
use crate::problems::{
    evaluation_grid, sample_points, Objective, Pde, ProblemId, ProblemSpec, SampleCounts,
};
use crate::refcavity::{load_reference, solve_cavity_with, ReferenceField, SolverConfig};
use crate::weighting::{lambdas, Scheme, WeightState};

/// The five compared variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[serde(alias = "PINN")]
    Pinn,
    #[serde(alias = "ia-pinn")]
    Ia,
    #[serde(alias = "aw-pinn")]
    Aw,
    #[serde(alias = "iaw-pinn")]
    Iaw,
    #[serde(alias = "i-pinn")]
    Ipinn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Pinn,
        ModelKind::Ia,
        ModelKind::Aw,
        ModelKind::Iaw,
        ModelKind::Ipinn,
    ];

    pub fn architecture(self) -> ArchKind {
        match self {
            ModelKind::Ia | ModelKind::Ipinn => ArchKind::Improved,
            _ => ArchKind::Plain,
        }
    }

    pub fn scheme(self) -> Scheme {
        match self {
            ModelKind::Pinn | ModelKind::Ia => Scheme::Fixed,
            ModelKind::Aw => Scheme::Aw,
            ModelKind::Iaw | ModelKind::Ipinn => Scheme::Iaw,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Pinn => "pinn",
            ModelKind::Ia => "ia",
            ModelKind::Aw => "aw",
            ModelKind::Iaw => "iaw",
            ModelKind::Ipinn => "ipinn",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinn" => Ok(ModelKind::Pinn),
            "ia" | "ia-pinn" => Ok(ModelKind::Ia),
            "aw" | "aw-pinn" => Ok(ModelKind::Aw),
            "iaw" | "iaw-pinn" => Ok(ModelKind::Iaw),
            "ipinn" | "i-pinn" => Ok(ModelKind::Ipinn),
            _ => Err(Error::contract(format!("unknown model '{s}'"))),
        }
    }
}

fn default_grid() -> usize {
    100
}

fn default_flush() -> usize {
    100
}

fn default_resample() -> usize {
    1
}

/// One training run. JSON keys are the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub model: ModelKind,
    pub layers: usize,
    pub units: usize,
    /// Weight cap; the problem default when absent.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub adam_iters: usize,
    #[serde(default)]
    pub lbfgs: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Replaces the problem's default coefficients.
    #[serde(default)]
    pub pde: Option<Pde>,
    #[serde(default)]
    pub counts: Option<SampleCounts>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Adam step counts at which to record evaluation-grid errors.
    #[serde(default)]
    pub eval_at: Vec<usize>,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub lbfgs_config: LbfgsConfig,
    /// Cavity reference field CSV; solved on the fly when absent.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default = "default_flush")]
    pub flush_every: usize,
    /// Draw a fresh collocation batch every this many Adam steps; 0 keeps
    /// the first batch for the whole run.
    #[serde(default = "default_resample")]
    pub resample_every: usize,
}

impl RunConfig {
    pub fn new(
        problem: ProblemId,
        model: ModelKind,
        layers: usize,
        units: usize,
        adam_iters: usize,
        seed: u64,
    ) -> Self {
        Self {
            problem,
            model,
            layers,
            units,
            gamma: None,
            adam_iters,
            lbfgs: false,
            seed,
            out: None,
            pde: None,
            counts: None,
            grid: default_grid(),
            eval_at: Vec::new(),
            adam: AdamConfig::default(),
            lbfgs_config: LbfgsConfig::default(),
            reference: None,
            flush_every: default_flush(),
            resample_every: default_resample(),
        }
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let pde = self
            .pde
            .clone()
            .unwrap_or_else(|| Pde::for_id(self.problem));
        if pde.id() != self.problem {
            return Err(Error::contract(format!(
                "pde override is {} but problem is {}",
                pde.id().name(),
                self.problem.name()
            )));
        }
        let mut spec = ProblemSpec::new(pde);
        if let Some(c) = self.counts {
            spec.counts = c;
        }
        if let Some(g) = self.gamma {
            spec.gamma = g;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn network(&self, spec: &ProblemSpec) -> Result<NetworkDef> {
        NetworkDef::new(
            self.model.architecture(),
            spec.pde.input_dim(),
            spec.pde.output_dim(),
            self.layers,
            self.units,
        )
    }

    fn validate(&self) -> Result<ProblemSpec> {
        if self.grid < 2 {
            return Err(Error::contract(
                "evaluation grid needs at least 2 points per axis",
            ));
        }
        let spec = self.problem_spec()?;
        if !(spec.gamma > 0.0) {
            return Err(Error::contract(format!(
                "gamma must be positive, got {}",
                spec.gamma
            )));
        }
        Ok(spec)
    }

    pub fn sampling_seed(&self) -> u64 {
        self.seed ^ 0x5DEE_CE66_D1CE_5EED
    }

    /// Seed of the collocation batch in use at Adam step `step`.
    pub fn batch_seed(&self, step: usize) -> u64 {
        let round = if self.resample_every == 0 {
            0
        } else {
            step / self.resample_every
        };
        self.sampling_seed().wrapping_add(round as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunTermination {
    AdamCompleted,
    Lbfgs(Termination),
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Relative L2 error of the compared field (cavity: stacked `(u, v)`).
    pub rel_l2: f64,
    /// Per-output relative errors, keyed by output name.
    pub components: Vec<(String, f64)>,
    /// Relative L2 error of the operator applied to the network against
    /// the forcing, for scalar problems.
    pub f_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iter: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub architecture: ArchKind,
    pub scheme: Scheme,
    pub gamma: f64,
    pub n_params: usize,
    /// Also written to `history.csv`; omitted from `record.json`.
    #[serde(skip)]
    pub history: Vec<HistoryRow>,
    pub iterations: usize,
    pub adam_iterations: usize,
    pub lbfgs_iterations: usize,
    pub final_loss: f64,
    pub final_lambdas: Vec<f64>,
    pub metrics: Option<Metrics>,
    pub checkpoints: Vec<Checkpoint>,
    pub wall_time_s: f64,
    pub termination: RunTermination,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

impl RunRecord {
    pub fn rel_l2(&self) -> Option<f64> {
        self.metrics.as_ref().map(|m| m.rel_l2)
    }

    pub fn rel_l2_at(&self, iter: usize) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|c| c.iter == iter)
            .map(|c| c.metrics.rel_l2)
    }
}

/// Ground truth on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub points: Vec<f64>,
    /// Compared fields: `[u]` for scalar problems, `[u, v]` for the cavity.
    pub fields: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub forcing: Option<Vec<f64>>,
}

impl Truth {
    pub fn for_problem(pde: &Pde, grid: usize, reference: Option<&ReferenceField>) -> Result<Self> {
        let points = evaluation_grid(pde, grid);
        let forcing = match pde {
            Pde::Cavity(_) => None,
            _ => Some(
                points
                    .chunks(2)
                    .map(|x| pde.forcing(x).expect("scalar"))
                    .collect(),
            ),
        };
        let (fields, names) = match pde {
            Pde::Cavity(_) => {
                let r = reference
                    .ok_or_else(|| Error::contract("cavity truth needs a reference field"))?;
                let (u, v): (Vec<f64>, Vec<f64>) =
                    points.chunks(2).map(|x| r.sample(x[0], x[1])).unzip();
                (vec![u, v], vec!["u".into(), "v".into()])
            }
            _ => (
                vec![points
                    .chunks(2)
                    .map(|x| pde.exact(x).expect("closed form")[0])
                    .collect()],
                vec!["u".into()],
            ),
        };
        Ok(Self {
            points,
            fields,
            names,
            forcing,
        })
    }

    pub fn metrics(
        &self,
        pde: &Pde,
        def: &NetworkDef,
        params: &[f64],
    ) -> Result<(Metrics, Vec<Vec<f64>>)> {
        let pred = predict(def, params, &self.points)?;
        let mut components = Vec::new();
        for (k, name) in self.names.iter().enumerate() {
            components.push((name.clone(), relative_l2(&pred[k], &self.fields[k])?));
        }
        let stacked_pred: Vec<f64> = pred[..self.fields.len()].concat();
        let stacked_truth: Vec<f64> = self.fields.concat();
        let rel_l2 = relative_l2(&stacked_pred, &stacked_truth)?;
        let f_error = match (
            &self.forcing,
            operator_field(pde, def, params, &self.points)?,
        ) {
            (Some(f), Some(lhs)) => Some(relative_l2(&lhs, f)?),
            _ => None,
        };
        Ok((
            Metrics {
                rel_l2,
                components,
                f_error,
            },
            pred,
        ))
    }
}

/// Grid used for cavity references solved on the fly.
pub const REFERENCE_GRID: usize = 129;

/// FD cavity reference at `re`, solved once per process.
pub fn cavity_reference(re: f64) -> Result<Arc<ReferenceField>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<ReferenceField>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().expect("reference cache poisoned");
    if let Some(r) = guard.get(&re.to_bits()) {
        return Ok(r.clone());
    }
    let field = Arc::new(solve_cavity_with(
        re,
        REFERENCE_GRID,
        &SolverConfig::default(),
    )?);
    guard.insert(re.to_bits(), field.clone());
    Ok(field)
}

/// Optional inputs for [`train_with`].
#[derive(Default)]
pub struct TrainOptions {
    /// Starting trainable vector `[network..., raw uncertainties...]`.
    pub initial: Option<Vec<f64>>,
    pub truth: Option<Truth>,
    /// Print progress to stderr every this many iterations.
    pub log_every: Option<usize>,
}

pub fn train(config: &RunConfig) -> Result<RunRecord> {
    train_with(config, TrainOptions::default())
}

fn aborted_reason(e: &Error) -> Option<String> {
    match e {
        Error::Numeric { .. } => Some(e.to_string()),
        _ => None,
    }
}

pub fn train_with(config: &RunConfig, opts: TrainOptions) -> Result<RunRecord> {
    let start = Instant::now();
    let spec = config.validate()?;
    let def = config.network(&spec)?;
    let weights = WeightState::build(config.model.scheme(), &spec.pde.terms(), spec.gamma)?;
    let mut batch_seed = config.batch_seed(0);
    let mut batch = sample_points(&spec, spec.counts, batch_seed)?;
    let objective = Objective::new(&spec, &def, &batch, &weights)?;
    let n_net = objective.n_network();
    let n_params = objective.n_params();

    let mut theta = match opts.initial {
        Some(v) => {
            if v.len() != n_params {
                return Err(Error::contract(format!(
                    "initial vector has {} entries, expected {}",
                    v.len(),
                    n_params
                )));
            }
            v
        }
        None => {
            let mut v = init_params(&def, config.seed).values;
            v.extend_from_slice(&weights.raw);
            v
        }
    };

    let truth = match opts.truth {
        Some(t) => t,
        None => {
            let reference = match (&spec.pde, &config.reference) {
                (Pde::Cavity(_), Some(path)) => Some(Arc::new(load_reference(path)?)),
                (Pde::Cavity(c), None) => Some(cavity_reference(c.re)?),
                _ => None,
            };
            Truth::for_problem(&spec.pde, config.grid, reference.as_deref())?
        }
    };

    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
    }
    let history_path = config.out.as_ref().map(|d| d.join("history.csv"));
    let mut history = HistoryLog::new(history_path.as_deref(), config.flush_every)?;
    let lambdas_of = |theta: &[f64]| {
        lambdas(
            weights.scheme,
            weights.gamma,
            &theta[n_net..],
            &weights.fixed_lambdas,
        )
    };

    let mut checkpoints = Vec::new();
    let mut checkpoint = |steps: usize, theta: &[f64]| -> Result<()> {
        if config.eval_at.contains(&steps)
            && !checkpoints.iter().any(|c: &Checkpoint| c.iter == steps)
        {
            let (metrics, _) = truth.metrics(&spec.pde, &def, &theta[..n_net])?;
            checkpoints.push(Checkpoint {
                iter: steps,
                metrics,
            });
        }
        Ok(())
    };

    let mut adam = AdamState::new(config.adam, theta.len());
    let mut abort_reason = None;
    let mut final_loss = f64::NAN;
    let mut adam_done = 0;
    for it in 0..config.adam_iters {
        checkpoint(it, &theta)?;
        if config.batch_seed(it) != batch_seed {
            batch_seed = config.batch_seed(it);
            batch = sample_points(&spec, spec.counts, batch_seed)?;
        }
        let objective = Objective::new(&spec, &def, &batch, &weights)?;
        let step = objective.evaluate(&theta).and_then(|e| {
            history.push(HistoryRow::new(
                it,
                e.total,
                &e.losses,
                &weights.terms,
                &lambdas_of(&theta)?,
            ))?;
            final_loss = e.total;
            adam.step(&mut theta, &e.grad)
        });
        if let Err(e) = step {
            match aborted_reason(&e) {
                Some(r) => {
                    abort_reason = Some(r);
                    break;
                }
                None => return Err(e),
            }
        }
        adam_done += 1;
        if let Some(k) = opts.log_every {
            if k > 0 && (it + 1) % k == 0 {
                eprintln!("iter {:>6}  loss {:.6e}", it + 1, final_loss);
            }
        }
    }
    if abort_reason.is_none() {
        checkpoint(adam_done, &theta)?;
    }

    let mut termination = if abort_reason.is_some() {
        RunTermination::Aborted
    } else {
        RunTermination::AdamCompleted
    };
    let mut lbfgs_iterations = 0;
    if config.lbfgs && abort_reason.is_none() {
        let mut failure = None;
        let base = history.rows.len();
        let objective = Objective::new(&spec, &def, &batch, &weights)?;
        let result = lbfgs_minimize(
            |x: &[f64]| {
                let e = objective.evaluate(x)?;
                Ok((e.total, e.grad, e.losses))
            },
            &mut theta,
            &config.lbfgs_config,
            |s| {
                let row = lambdas_of(s.params).and_then(|lam| {
                    history.push(HistoryRow::new(
                        base + s.iter - 1,
                        s.loss,
                        s.aux,
                        &weights.terms,
                        &lam,
                    ))
                });
                if let Err(e) = row {
                    failure = Some(e);
                    return false;
                }
                if let Some(k) = opts.log_every {
                    if k > 0 && s.iter % k == 0 {
                        eprintln!("lbfgs {:>6}  loss {:.6e}", s.iter, s.loss);
                    }
                }
                true
            },
        );
        if let Some(e) = failure {
            return Err(e);
        }
        match result {
            Ok(rep) => {
                lbfgs_iterations = rep.iterations;
                final_loss = rep.loss;
                termination = RunTermination::Lbfgs(rep.termination);
            }
            Err(e) => match aborted_reason(&e) {
                Some(r) => {
                    abort_reason = Some(r);
                    termination = RunTermination::Aborted;
                }
                None => return Err(e),
            },
        }
    }
    history.finish()?;

    let (metrics, pred) = match truth.metrics(&spec.pde, &def, &theta[..n_net]) {
        Ok((m, p)) => (Some(m), Some(p)),
        Err(e) if aborted_reason(&e).is_some() => (None, None),
        Err(e) => return Err(e),
    };
    let metrics = metrics.filter(|m| m.rel_l2.is_finite());

    if let Some(dir) = &config.out {
        if let (Some(pred), Some(_)) = (&pred, &metrics) {
            write_field(&dir.join("field.csv"), &spec.pde, &truth, pred)?;
        }
        save_parameters(
            &dir.join("params.json"),
            &def,
            &theta,
            weights.is_adaptive(),
        )?;
    }

    let record = RunRecord {
        config: config.clone(),
        architecture: def.kind,
        scheme: weights.scheme,
        gamma: spec.gamma,
        n_params: theta.len(),
        iterations: history.rows.len(),
        history: std::mem::take(&mut history.rows),
        adam_iterations: adam_done,
        lbfgs_iterations,
        final_loss,
        final_lambdas: lambdas_of(&theta).unwrap_or_default(),
        metrics,
        checkpoints,
        wall_time_s: start.elapsed().as_secs_f64(),
        termination,
        aborted: abort_reason.is_some(),
        abort_reason,
    };
    if let Some(dir) = &config.out {
        write_record(&dir.join("record.json"), &record)?;
    }
    Ok(record)
}

/// Network parameters plus an `uncertainty` block for adaptive schemes.
pub fn save_parameters(path: &Path, def: &NetworkDef, theta: &[f64], adaptive: bool) -> Result<()> {
    let n = def.param_count();
    let mut set = ParameterSet::new(theta[..n].to_vec(), def.layout())?;
    if adaptive {
        set.append_block("uncertainty", &theta[n..]);
    }
    set.save_json(path)
}

pub fn write_record(path: &Path, record: &RunRecord) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(record)?)?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<RunRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(problem: ProblemId, model: ModelKind, iters: usize) -> RunConfig {
        let mut c = RunConfig::new(problem, model, 2, 8, iters, 3);
        c.grid = 12;
        c.counts = Some(match problem {
            ProblemId::Kg => SampleCounts {
                n_r: 16,
                n_bc: 8,
                n_ic: 8,
            },
            _ => SampleCounts {
                n_r: 16,
                n_bc: 16,
                n_ic: 0,
            },
        });
        c
    }

    #[test]
    fn model_mapping() {
        use ArchKind::*;
        let expect = [
            (ModelKind::Pinn, Plain, Scheme::Fixed),
            (ModelKind::Ia, Improved, Scheme::Fixed),
            (ModelKind::Aw, Plain, Scheme::Aw),
            (ModelKind::Iaw, Plain, Scheme::Iaw),
            (ModelKind::Ipinn, Improved, Scheme::Iaw),
        ];
        for (m, a, s) in expect {
            assert_eq!((m.architecture(), m.scheme()), (a, s));
            assert_eq!(m.name().parse::<ModelKind>().unwrap(), m);
        }
        assert_eq!("i-pinn".parse::<ModelKind>().unwrap(), ModelKind::Ipinn);
    }

    #[test]
    fn config_json_keys() {
        let json = r#"{"problem":"kg","model":"ipinn","layers":3,"units":20,"gamma":1e6,"adam_iters":10,"lbfgs":true,"seed":4}"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(
            (c.problem, c.model, c.layers, c.units),
            (ProblemId::Kg, ModelKind::Ipinn, 3, 20)
        );
        assert_eq!(
            (c.gamma, c.adam_iters, c.lbfgs, c.seed),
            (Some(1e6), 10, true, 4)
        );
        assert_eq!(c.grid, 100);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let c = tiny(ProblemId::Helmholtz, ModelKind::Ipinn, 15);
        let mut a = train(&c).unwrap();
        let mut b = train(&c).unwrap();
        a.wall_time_s = 0.0;
        b.wall_time_s = 0.0;
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 15);
    }

    #[test]
    fn capped_weights_in_history() {
        let mut c = tiny(ProblemId::Kg, ModelKind::Iaw, 40);
        c.gamma = Some(10.0);
        c.adam.lr = 0.05;
        let r = train(&c).unwrap();
        for row in &r.history {
            assert!(row.lambdas().all(|l| l > 0.0 && l <= 10.0));
            assert!(row.l_ic.is_some() && row.lam_ic.is_some());
        }
    }

    #[test]
    fn injected_truth_gives_zero_error() {
        let c = tiny(ProblemId::Helmholtz, ModelKind::Pinn, 0);
        let spec = c.problem_spec().unwrap();
        let def = c.network(&spec).unwrap();
        let params = init_params(&def, 77).values;
        let mut truth = Truth::for_problem(&spec.pde, c.grid, None).unwrap();
        truth.fields = predict(&def, &params, &truth.points).unwrap();
        let r = train_with(
            &c,
            TrainOptions {
                initial: Some(params),
                truth: Some(truth),
                log_every: None,
            },
        )
        .unwrap();
        assert!(r.rel_l2().unwrap() <= 1e-10);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn nan_aborts_with_diagnostic() {
        let c = tiny(ProblemId::Helmholtz, ModelKind::Aw, 5);
        let spec = c.problem_spec().unwrap();
        let def = c.network(&spec).unwrap();
        let mut v = init_params(&def, 1).values;
        v[0] = f64::NAN;
        v.extend([0.0, 0.0]);
        let r = train_with(
            &c,
            TrainOptions {
                initial: Some(v),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.aborted);
        assert_eq!(r.termination, RunTermination::Aborted);
        assert!(r.history.is_empty());
        assert!(r.abort_reason.unwrap().contains("non-finite"));
    }

    #[test]
    fn batch_rounds() {
        let mut c = tiny(ProblemId::Helmholtz, ModelKind::Pinn, 10);
        c.resample_every = 0;
        assert!((0..50).all(|k| c.batch_seed(k) == c.sampling_seed()));
        c.resample_every = 4;
        assert_eq!(c.batch_seed(3), c.batch_seed(0));
        assert_ne!(c.batch_seed(4), c.batch_seed(3));
    }

    #[test]
    fn fixed_batch_differs_from_resampled() {
        let mut c = tiny(ProblemId::Helmholtz, ModelKind::Ipinn, 6);
        let resampled = train(&c).unwrap();
        c.resample_every = 0;
        let fixed = train(&c).unwrap();
        assert_eq!(resampled.history[0], fixed.history[0]);
        assert_ne!(resampled.history[5].l_r, fixed.history[5].l_r);
    }

    #[test]
    fn checkpoint_matches_shorter_run() {
        let mut long = tiny(ProblemId::Kg, ModelKind::Ipinn, 30);
        long.eval_at = vec![12];
        let short = tiny(ProblemId::Kg, ModelKind::Ipinn, 12);
        let a = train(&long).unwrap();
        let b = train(&short).unwrap();
        assert_eq!(a.rel_l2_at(12), b.rel_l2());
        assert_eq!(&a.history[..12], &b.history[..]);
    }

    #[test]
    fn outputs_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(ProblemId::Kg, ModelKind::Ipinn, 7);
        c.out = Some(dir.path().to_path_buf());
        c.lbfgs = true;
        c.lbfgs_config.max_iters = 3;
        let r = train(&c).unwrap();
        let hist = read_history(&dir.path().join("history.csv")).unwrap();
        assert_eq!(hist, r.history);
        assert_eq!(hist.len(), 7 + r.lbfgs_iterations);
        let back = read_record(&dir.path().join("record.json")).unwrap();
        assert_eq!(back.metrics, r.metrics);
        let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
        assert!(field.starts_with("x,t,u_exact,u_pred,abs_err\n"));
        assert_eq!(field.lines().count(), 1 + 12 * 12);
        let p = ParameterSet::load_json(&dir.path().join("params.json")).unwrap();
        assert_eq!(p.len(), r.n_params);
    }
}
