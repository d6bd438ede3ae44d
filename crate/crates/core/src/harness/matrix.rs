use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_record, train, ModelKind, RunConfig, RunRecord};
use crate::error::Result;
use crate::optim::{AdamConfig, LbfgsConfig};
use crate::problems::{Pde, ProblemId, ProblemSpec, SampleCounts};

/// A scalar or a list in the matrix config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_seeds() -> OneOrMany<u64> {
    OneOrMany::Many(vec![0, 1, 2])
}

fn default_grid() -> usize {
    100
}

/// Experiment matrix. Keys follow [`RunConfig`]; `model`, `layers`,
/// `units`, `gamma` and `seed` also accept lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub problem: ProblemId,
    pub model: OneOrMany<ModelKind>,
    pub layers: OneOrMany<usize>,
    pub units: OneOrMany<usize>,
    #[serde(default)]
    pub gamma: Option<OneOrMany<f64>>,
    pub adam_iters: usize,
    #[serde(default)]
    pub lbfgs: bool,
    #[serde(default = "default_seeds")]
    pub seed: OneOrMany<u64>,
    #[serde(default)]
    pub eval_at: Vec<usize>,
    #[serde(default)]
    pub pde: Option<Pde>,
    #[serde(default)]
    pub counts: Option<SampleCounts>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub lbfgs_config: LbfgsConfig,
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub resample_every: Option<usize>,
    /// Concurrent runs; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Write per-run history and field files under `runs/`.
    #[serde(default = "yes")]
    pub keep_runs: bool,
    /// Reuse a kept run whose `record.json` echoes the same config.
    #[serde(default)]
    pub resume: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub model: ModelKind,
    pub layers: usize,
    pub units: usize,
    pub gamma: f64,
}

impl CellKey {
    fn tag(&self) -> String {
        format!(
            "{}_L{}_U{}_g{:e}",
            self.model.name(),
            self.layers,
            self.units,
            self.gamma
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub records: Vec<RunRecord>,
    /// `(seed, message)` for runs that failed or produced no metrics.
    pub failures: Vec<(u64, String)>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

impl CellResult {
    fn completed(&self) -> impl Iterator<Item = &RunRecord> {
        self.records
            .iter()
            .filter(|r| r.metrics.is_some() && !r.aborted)
    }

    pub fn rel_l2s(&self) -> Vec<f64> {
        self.completed().filter_map(|r| r.rel_l2()).collect()
    }

    pub fn median_rel_l2(&self) -> Option<f64> {
        median(&self.rel_l2s())
    }

    pub fn median_f_error(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .completed()
            .filter_map(|r| r.metrics.as_ref()?.f_error)
            .collect();
        median(&v)
    }

    pub fn median_rel_l2_at(&self, iter: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .records
            .iter()
            .filter_map(|r| r.rel_l2_at(iter))
            .collect();
        median(&v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixResult {
    pub problem: ProblemId,
    pub eval_at: Vec<usize>,
    pub cells: Vec<CellResult>,
}

impl MatrixResult {
    pub fn cell(&self, model: ModelKind, layers: usize, units: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| (c.key.model, c.key.layers, c.key.units) == (model, layers, units))
    }
}

impl MatrixConfig {
    pub fn cells(&self) -> Result<Vec<CellKey>> {
        let default_gamma = match &self.pde {
            Some(p) => ProblemSpec::new(p.clone()).gamma,
            None => ProblemSpec::for_id(self.problem).gamma,
        };
        let gammas = self
            .gamma
            .as_ref()
            .map_or(vec![default_gamma], |g| g.to_vec());
        let mut keys = Vec::new();
        for &layers in &self.layers.to_vec() {
            for &units in &self.units.to_vec() {
                for &model in &self.model.to_vec() {
                    for &gamma in &gammas {
                        keys.push(CellKey {
                            model,
                            layers,
                            units,
                            gamma,
                        });
                    }
                }
            }
        }
        Ok(keys)
    }

    pub fn run_config(&self, key: &CellKey, seed: u64, out: Option<&Path>) -> RunConfig {
        let mut c = RunConfig::new(
            self.problem,
            key.model,
            key.layers,
            key.units,
            self.adam_iters,
            seed,
        );
        c.gamma = Some(key.gamma);
        c.lbfgs = self.lbfgs;
        c.eval_at = self.eval_at.clone();
        c.pde = self.pde.clone();
        c.counts = self.counts;
        c.grid = self.grid;
        c.adam = self.adam;
        c.lbfgs_config = self.lbfgs_config;
        c.reference = self.reference.clone();
        if let Some(k) = self.resample_every {
            c.resample_every = k;
        }
        c.out = out
            .filter(|_| self.keep_runs)
            .map(|d| d.join("runs").join(format!("{}_s{seed}", key.tag())));
        c
    }
}

fn previous(job: &RunConfig) -> Option<RunRecord> {
    let path = job.out.as_ref()?.join("record.json");
    // a moved run directory still counts as the same run
    read_record(&path).ok().filter(|r| {
        RunConfig {
            out: job.out.clone(),
            ..r.config.clone()
        } == *job
    })
}

fn run_jobs(jobs: Vec<RunConfig>, workers: Option<usize>, resume: bool) -> Vec<Result<RunRecord>> {
    let run = |job: &RunConfig| match resume.then(|| previous(job)).flatten() {
        Some(r) => Ok(r),
        None => train(job),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let threads = workers.unwrap_or(0);
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| jobs.par_iter().map(run).collect()),
            Err(_) => jobs.iter().map(run).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        jobs.iter().map(run).collect()
    }
}

/// Runs every cell for every seed. Failed runs are recorded in their cell.
pub fn run_matrix(config: &MatrixConfig, out: Option<&Path>) -> Result<MatrixResult> {
    let keys = config.cells()?;
    let seeds = config.seed.to_vec();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let jobs: Vec<RunConfig> = keys
        .iter()
        .flat_map(|k| seeds.iter().map(move |&s| (k, s)))
        .map(|(k, s)| config.run_config(k, s, out))
        .collect();
    let mut results = run_jobs(jobs, config.workers, config.resume).into_iter();
    let mut cells = Vec::with_capacity(keys.len());
    for key in keys {
        let mut cell = CellResult {
            key,
            records: Vec::new(),
            failures: Vec::new(),
        };
        for &seed in &seeds {
            match results.next().expect("one result per job") {
                Ok(r) => {
                    if let Some(reason) = &r.abort_reason {
                        cell.failures.push((seed, reason.clone()));
                    }
                    cell.records.push(r);
                }
                Err(e) => cell.failures.push((seed, e.to_string())),
            }
        }
        cells.push(cell);
    }
    let result = MatrixResult {
        problem: config.problem,
        eval_at: config.eval_at.clone(),
        cells,
    };
    if let Some(dir) = out {
        write_summary(&dir.join("summary.csv"), &result)?;
    }
    Ok(result)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_summary(path: &Path, result: &MatrixResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "problem",
        "model",
        "layers",
        "units",
        "gamma",
        "runs",
        "failed",
        "median_rel_l2",
        "min_rel_l2",
        "max_rel_l2",
        "median_f_error",
        "median_wall_time_s",
    ]
    .map(String::from)
    .to_vec();
    header.extend(
        result
            .eval_at
            .iter()
            .map(|k| format!("median_rel_l2_at_{k}")),
    );
    w.write_record(&header)?;
    for c in &result.cells {
        let errs = c.rel_l2s();
        let times: Vec<f64> = c.records.iter().map(|r| r.wall_time_s).collect();
        let mut row = vec![
            result.problem.name().to_string(),
            c.key.model.name().to_string(),
            c.key.layers.to_string(),
            c.key.units.to_string(),
            c.key.gamma.to_string(),
            c.records.len().to_string(),
            c.failures.len().to_string(),
            opt(c.median_rel_l2()),
            opt(errs.iter().copied().reduce(f64::min)),
            opt(errs.iter().copied().reduce(f64::max)),
            opt(c.median_f_error()),
            opt(median(&times)),
        ];
        row.extend(result.eval_at.iter().map(|&k| opt(c.median_rel_l2_at(k))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
