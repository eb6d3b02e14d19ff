//! Command-line front end for single runs and grid searches.
//!
//! Exit status: 0 on success, 1 on error, 2 when any run was flagged
//! (divergence or final-solver cap exhaustion).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochastic_cubic::harness::{
    run_experiment, Algorithm, ExperimentConfig, ExperimentReport, Param, ProblemRegistry, Selection, WindowRule,
};
use stochastic_cubic::{Error, Result};

#[derive(Parser)]
#[command(name = "scr-bench", version, about = "Stochastic cubic regularization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration.
    #[command(allow_negative_numbers = true)]
    Run(Common),
    /// Run a grid search; list-valued flags become grid axes.
    #[command(allow_negative_numbers = true)]
    Grid {
        /// Start from the synthetic-saddle tuning grid.
        #[arg(long, value_parser = ["saddle"])]
        preset: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// List the registered problems.
    ListProblems,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: Option<String>,
    /// Algorithm(s): scr, sgd, adagrad (comma-separated for grids).
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algorithm>,
    /// Master seed(s), comma-separated for grids.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Oracle-call budget per run.
    #[arg(long)]
    budget: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with settings and grids; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Enable or disable the SCR early-termination test.
    #[arg(long)]
    early_termination: Option<bool>,
    #[command(flatten)]
    hyper: HyperFlags,
}

/// Per-algorithm hyperparameters; each accepts a comma-separated list.
#[derive(Args)]
struct HyperFlags {
    /// Step size (all algorithms; the subsolver step for SCR).
    #[arg(long, value_delimiter = ',')]
    step: Vec<String>,
    /// Minibatch size (SGD, AdaGrad).
    #[arg(long, value_delimiter = ',')]
    batch: Vec<String>,
    /// Gradient minibatch size or `auto` (SCR).
    #[arg(long, value_delimiter = ',')]
    batch_grad: Vec<String>,
    /// Hessian-vector minibatch size or `auto` (SCR).
    #[arg(long, value_delimiter = ',')]
    batch_hvp: Vec<String>,
    /// Subsolver iterations per outer iteration (SCR).
    #[arg(long, value_delimiter = ',')]
    inner_iters: Vec<String>,
    /// Perturbation coefficient c' of the subsolver (SCR).
    #[arg(long, value_delimiter = ',')]
    perturb_coeff: Vec<String>,
    /// Denominator offset (AdaGrad).
    #[arg(long, value_delimiter = ',')]
    adagrad_eps: Vec<String>,
}

impl HyperFlags {
    fn axes(&self) -> Vec<(&'static str, &[String])> {
        vec![
            ("step", &self.step),
            ("batch", &self.batch),
            ("batch_grad", &self.batch_grad),
            ("batch_hvp", &self.batch_hvp),
            ("inner_iters", &self.inner_iters),
            ("perturb_coeff", &self.perturb_coeff),
            ("adagrad_eps", &self.adagrad_eps),
        ]
    }
}

fn build_configs(common: &Common, preset: Option<&str>, single: bool) -> Result<Vec<ExperimentConfig>> {
    let file = match &common.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?,
        ),
        None => None,
    };
    let algos = if common.algo.is_empty() {
        // The file may name the algorithm; otherwise SCR.
        let mut probe = ExperimentConfig::new("synthetic", Algorithm::Scr, "out");
        if let Some(text) = &file {
            probe.apply_toml(text)?;
        }
        vec![probe.algorithm]
    } else {
        common.algo.clone()
    };
    if single && algos.len() > 1 {
        return Err(Error::Config { key: "algo".into(), message: "`run` takes one algorithm".into() });
    }

    let axes = common.hyper.axes();
    for (key, values) in &axes {
        if !values.is_empty() && !algos.iter().any(|a| a.grid_keys().contains(key)) {
            return Err(Error::Config {
                key: key.to_string(),
                message: "not a hyperparameter of the selected algorithm(s)".into(),
            });
        }
        if single && values.len() > 1 {
            return Err(Error::Config {
                key: key.to_string(),
                message: "`run` takes a single value; use `grid`".into(),
            });
        }
    }
    if single && common.seed.len() > 1 {
        return Err(Error::Config { key: "seed".into(), message: "`run` takes a single seed; use `grid`".into() });
    }

    algos
        .into_iter()
        .map(|algo| {
            let mut cfg = match preset {
                Some(_) => ExperimentConfig::saddle(algo, "out"),
                None => ExperimentConfig::new("synthetic", algo, "out"),
            };
            if let Some(text) = &file {
                cfg.apply_toml(text)?;
                cfg.algorithm = algo;
                cfg.grids.retain(|k, _| algo.grid_keys().contains(&k.as_str()));
            }
            apply_flags(&mut cfg, common)?;
            for (key, values) in &axes {
                if !values.is_empty() && algo.grid_keys().contains(key) {
                    let params = values
                        .iter()
                        .map(|v| {
                            v.parse::<Param>()
                                .map_err(|e| Error::Config { key: key.to_string(), message: e.to_string() })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    cfg.grids.insert(key.to_string(), params);
                }
            }
            if single {
                if let Some((key, _)) = cfg.grids.iter().find(|(_, v)| v.len() > 1) {
                    return Err(Error::Config {
                        key: format!("grid.{key}"),
                        message: "`run` takes a single value; use `grid`".into(),
                    });
                }
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

fn apply_flags(cfg: &mut ExperimentConfig, c: &Common) -> Result<()> {
    if let Some(p) = &c.problem {
        cfg.problem = p.clone();
    }
    if !c.seed.is_empty() {
        cfg.seeds = c.seed.clone();
    }
    if let Some(b) = c.budget {
        cfg.budget = b;
    }
    if let Some(o) = &c.out {
        cfg.output_path = o.clone();
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    let s = &mut cfg.settings;
    if let Some(v) = c.epsilon {
        s.epsilon = v;
    }
    if let Some(v) = c.rho {
        s.rho = v;
    }
    if c.ell.is_some() {
        s.ell = c.ell;
    }
    if let Some(v) = c.noise_std {
        s.noise_std = v;
    }
    if c.dim.is_some() {
        s.dim = c.dim;
    }
    if let Some(v) = c.tolerance {
        s.tolerance = v;
    }
    if let Some(v) = c.early_termination {
        s.early_termination = v;
    }
    Ok(())
}

fn report(cfg: &ExperimentConfig, rep: &ExperimentReport) {
    println!(
        "{}: {} runs -> {}, {}",
        cfg.algorithm,
        rep.summaries.len(),
        rep.trace_path.display(),
        rep.summary_path.display()
    );
    for (seed, sel) in rep.selections(WindowRule::StayWithin) {
        match sel {
            Selection::Best(id) => {
                let s = rep.summary(&id).expect("selected run exists");
                println!(
                    "  seed {seed}: best {id} reached tolerance after {} calls [{}]",
                    s.row.calls_to_tolerance.unwrap_or_default(),
                    s.row.hyperparameters
                );
            }
            Selection::NoneConverged => println!("  seed {seed}: none converged"),
        }
    }
    for (id, msg) in rep.flagged() {
        log::warn!("{id}: {msg}");
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let registry = ProblemRegistry::builtin();
    let configs = match &cli.command {
        Command::ListProblems => {
            for (name, description) in registry.names() {
                println!("{name:<12} {description}");
            }
            return Ok(0);
        }
        Command::Run(common) => build_configs(common, None, true)?,
        Command::Grid { preset, common } => build_configs(common, preset.as_deref(), false)?,
    };
    let mut code = 0;
    for cfg in &configs {
        let rep = run_experiment(cfg, &registry)?;
        report(cfg, &rep);
        code = code.max(rep.exit_code());
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage errors exit with 1; 2 is reserved for flagged runs.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
