use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ipinn::harness::{run_matrix, train_with, MatrixConfig, ModelKind, RunConfig, TrainOptions};
use ipinn::problems::ProblemId;
use ipinn::refcavity::{
    solve_cavity_with, write_centerline, write_reference, CenterlineTable, SolverConfig,
};

#[derive(Parser)]
#[command(
    name = "ipinn",
    about = "Train and benchmark physics-informed networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model.
    Run {
        #[arg(long)]
        problem: ProblemId,
        #[arg(long)]
        model: ModelKind,
        #[arg(long, default_value_t = 7)]
        layers: usize,
        #[arg(long, default_value_t = 50)]
        units: usize,
        /// Weight cap (problem default when omitted).
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long = "adam-iters", default_value_t = 40_000)]
        adam_iters: usize,
        /// Follow Adam with an L-BFGS phase.
        #[arg(long)]
        lbfgs: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Record grid errors after these Adam step counts.
        #[arg(long = "eval-at", value_delimiter = ',')]
        eval_at: Vec<usize>,
        #[arg(long = "log-every", default_value_t = 1000)]
        log_every: usize,
        /// Fresh collocation batch every N Adam steps (0: fixed batch).
        #[arg(long = "resample-every", default_value_t = 1)]
        resample_every: usize,
        /// Multiply the Adam step size by this factor every `--decay-steps`.
        #[arg(long = "lr-decay")]
        lr_decay: Option<f64>,
        #[arg(long = "decay-steps")]
        decay_steps: Option<usize>,
    },
    /// Run an experiment matrix from a JSON config.
    Matrix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the lid-driven cavity by finite differences.
    Refsolve {
        #[arg(long, default_value_t = 100.0)]
        re: f64,
        #[arg(long, default_value_t = 129)]
        n: usize,
        /// Field CSV (`x,y,u,v`).
        #[arg(long)]
        out: PathBuf,
        /// Also write the centerline profiles (`axis,coord,value`).
        #[arg(long)]
        centerline: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long = "max-iters", default_value_t = 200_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1.5)]
        relaxation: f64,
    },
}

fn run(cli: Cli) -> ipinn::Result<()> {
    match cli.command {
        Command::Run {
            problem,
            model,
            layers,
            units,
            gamma,
            adam_iters,
            lbfgs,
            seed,
            out,
            eval_at,
            log_every,
            resample_every,
            lr_decay,
            decay_steps,
        } => {
            let mut config = RunConfig::new(problem, model, layers, units, adam_iters, seed);
            config.gamma = gamma;
            config.lbfgs = lbfgs;
            config.out = Some(out.clone());
            config.eval_at = eval_at;
            config.resample_every = resample_every;
            if let Some(r) = lr_decay {
                config.adam.decay_rate = r;
            }
            if let Some(k) = decay_steps {
                config.adam.decay_steps = k;
            }
            let record = train_with(
                &config,
                TrainOptions {
                    log_every: Some(log_every),
                    ..Default::default()
                },
            )?;
            if let Some(reason) = &record.abort_reason {
                eprintln!("run aborted: {reason}");
            }
            if let Some(m) = &record.metrics {
                println!("relative L2 error: {:.4e}", m.rel_l2);
                if let Some(f) = m.f_error {
                    println!("residual-field error: {f:.4e}");
                }
            }
            println!(
                "wall time: {:.1} s; outputs in {}",
                record.wall_time_s,
                out.display()
            );
        }
        Command::Matrix { config, out } => {
            let cfg: MatrixConfig = serde_json::from_str(&std::fs::read_to_string(&config)?)?;
            let result = run_matrix(&cfg, Some(&out))?;
            for cell in &result.cells {
                let m = cell
                    .median_rel_l2()
                    .map_or("-".into(), |e| format!("{e:.4e}"));
                println!(
                    "{:<6} L={:<2} U={:<3} gamma={:<8e} median rel L2 {m} ({} failed)",
                    cell.key.model.name(),
                    cell.key.layers,
                    cell.key.units,
                    cell.key.gamma,
                    cell.failures.len()
                );
            }
            println!("summary: {}", out.join("summary.csv").display());
        }
        Command::Refsolve {
            re,
            n,
            out,
            centerline,
            tol,
            max_iters,
            relaxation,
        } => {
            let cfg = SolverConfig {
                relaxation,
                tol,
                max_iters,
                ..Default::default()
            };
            let field = solve_cavity_with(re, n, &cfg)?;
            write_reference(&out, &field)?;
            if let Some(path) = centerline {
                write_centerline(&path, &CenterlineTable::from_field(&field))?;
            }
            println!(
                "converged in {} sweeps (residual {:.2e}); wrote {}",
                field.iterations,
                field.residual,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
