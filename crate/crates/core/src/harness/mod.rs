//! Grid-search harness: expands an experiment into runs, executes them on
//! the worker pool, and writes trace and summary CSV files.
//!
//! Every run derives its seed from the master seed and the canonical
//! hyperparameter string, so results do not depend on grid order or on the
//! number of workers.

pub mod config;
pub mod output;
pub mod registry;
pub mod select;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

pub use config::{
    saddle_grid, Algorithm, ExperimentConfig, Param, Settings, DEFAULT_TOLERANCE, EXPERIMENT_INNER_ITERS,
};
pub use output::{format_real, read_summary_csv, read_trace_csv, SummaryRow, TraceRow};
pub use registry::ProblemRegistry;
pub use select::{select_best, select_per_seed, RunSummary, Selection, WindowRule};

use crate::baselines::{adagrad_run, sgd_run, FirstOrderConfig};
use crate::error::{Error, Result};
use crate::oracle::{Oracle, SmoothnessParams, StochasticProblem};
use crate::parallel::{map_ordered, Execution};
use crate::point::Point;
use crate::rng::{derive_seed, hash_key};
use crate::scr::{default_outer_iters, scr_run, BatchSize, ScrConfig};
use crate::subsolver::SubsolverConfig;
use crate::trace::RunTrace;

/// Maximum trace rows written per run.
pub const MAX_TRACE_ROWS: usize = 10_000;

/// One point of the grid for one master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Seed actually used by the run, derived from `seed` and the parameters.
    pub run_seed: u64,
    pub params: BTreeMap<String, Param>,
    pub hyperparameters: String,
}

/// Hyperparameter defaults applied when an axis is absent from the grid.
pub fn default_params(algorithm: Algorithm, ell: f64) -> BTreeMap<String, Param> {
    let pairs: Vec<(&str, Param)> = match algorithm {
        Algorithm::Scr => vec![
            ("batch_grad", Param::Num(100.0)),
            ("batch_hvp", Param::Num(10.0)),
            ("inner_iters", Param::Num(EXPERIMENT_INNER_ITERS as f64)),
            ("perturb_coeff", Param::Num(1.0)),
            ("step", Param::Num(1.0 / (20.0 * ell))),
        ],
        Algorithm::Sgd => vec![("batch", Param::Num(10.0)), ("step", Param::Num(0.01))],
        Algorithm::AdaGrad => {
            vec![("adagrad_eps", Param::Num(1e-8)), ("batch", Param::Num(10.0)), ("step", Param::Num(0.01))]
        }
    };
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn canonical_hyperparameters(params: &BTreeMap<String, Param>) -> String {
    params.iter().map(|(k, v)| format!("{k}={}", config::format_param(k, *v))).collect::<Vec<_>>().join(";")
}

/// Cartesian product of the grid axes (keys in sorted order, values in
/// listed order) crossed with the seeds; configurations vary slowest.
pub fn expand_runs(cfg: &ExperimentConfig, ell: f64) -> Vec<RunSpec> {
    let mut combos: Vec<BTreeMap<String, Param>> = vec![default_params(cfg.algorithm, ell)];
    for (key, values) in &cfg.grids {
        combos = combos
            .into_iter()
            .flat_map(|base| {
                values.iter().map(move |v| {
                    let mut next = base.clone();
                    next.insert(key.clone(), *v);
                    next
                })
            })
            .collect();
    }
    let mut runs = Vec::with_capacity(combos.len() * cfg.seeds.len());
    for (idx, params) in combos.into_iter().enumerate() {
        let hyper = canonical_hyperparameters(&params);
        let key = hash_key(&format!("{}|{hyper}", cfg.algorithm));
        for &seed in &cfg.seeds {
            runs.push(RunSpec {
                run_id: format!("{}-{idx:04}-s{seed}", cfg.algorithm),
                algorithm: cfg.algorithm,
                seed,
                run_seed: derive_seed(seed, key),
                params: params.clone(),
                hyperparameters: hyper.clone(),
            });
        }
    }
    runs
}

fn param_f64(spec: &RunSpec, key: &str) -> Result<f64> {
    spec.params
        .get(key)
        .and_then(Param::num)
        .ok_or_else(|| Error::Config { key: format!("grid.{key}"), message: "missing numeric value".into() })
}

fn batch(spec: &RunSpec, key: &str) -> Result<BatchSize> {
    match spec.params.get(key) {
        Some(Param::Auto) => Ok(BatchSize::Auto),
        _ => Ok(BatchSize::Fixed(param_f64(spec, key)? as usize)),
    }
}

/// Executes one run and returns its full, unthinned trace.
pub fn execute_run(
    problem: &Arc<dyn StochasticProblem>,
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    x0: &Point,
) -> Result<RunTrace> {
    let oracle = Oracle::new(problem.clone());
    let s = &cfg.settings;
    match spec.algorithm {
        Algorithm::Scr => {
            let ell = s.ell.unwrap_or(problem.smoothness().ell);
            let smoothness = SmoothnessParams::new(ell, s.rho)?;
            let sub = SubsolverConfig::new(ell, s.rho, s.epsilon)?
                .with_inner_iters(param_f64(spec, "inner_iters")? as usize)
                .with_perturb_coeff(param_f64(spec, "perturb_coeff")?)
                .with_step_size(param_f64(spec, "step")?);
            let scr = ScrConfig::new(s.epsilon, smoothness, problem.noise())?
                .with_subsolver(sub)
                .with_batches(batch(spec, "batch_grad")?, batch(spec, "batch_hvp")?)
                .with_budget(cfg.budget)
                .with_max_outer_iters(default_outer_iters(s.rho, s.epsilon, 1.0))
                .with_early_termination(s.early_termination);
            Ok(scr_run(&oracle, x0, &scr, spec.run_seed)?.trace)
        }
        Algorithm::Sgd | Algorithm::AdaGrad => {
            let step = param_f64(spec, "step")?;
            let b = param_f64(spec, "batch")? as usize;
            if spec.algorithm == Algorithm::Sgd {
                sgd_run(&oracle, &FirstOrderConfig::sgd(step, b, cfg.budget), x0, spec.run_seed)
            } else {
                let mut fo = FirstOrderConfig::adagrad(step, b, cfg.budget);
                fo.adagrad_eps = param_f64(spec, "adagrad_eps")?;
                adagrad_run(&oracle, &fo, x0, spec.run_seed)
            }
        }
    }
}

/// Result of one run as kept by the harness: the summary plus the thinned
/// trace rows.
struct RunOutput {
    summary: RunSummary,
    rows: Vec<TraceRow>,
}

fn run_one(
    problem: &Arc<dyn StochasticProblem>,
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    x0: &Point,
) -> Result<RunOutput> {
    let trace = execute_run(problem, cfg, spec, x0)?;
    let (first_hit, calls, best_f) = select::summarize(&trace, problem.optimal_value(), cfg.settings.tolerance);
    let algo = spec.algorithm.to_string();
    let rows = trace
        .thinned(MAX_TRACE_ROWS)
        .into_iter()
        .map(|r| TraceRow {
            run_id: spec.run_id.clone(),
            algo: algo.clone(),
            seed: spec.seed,
            oracle_calls: r.total_oracle_calls,
            true_f: r.true_f,
            extra: r.extra,
        })
        .collect();
    let summary = RunSummary {
        row: SummaryRow {
            run_id: spec.run_id.clone(),
            algo,
            hyperparameters: spec.hyperparameters.clone(),
            converged: calls.is_some(),
            calls_to_tolerance: calls,
            best_f,
        },
        seed: spec.seed,
        first_hit,
        flags: select::event_flags(&trace),
    };
    Ok(RunOutput { summary, rows })
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub summaries: Vec<RunSummary>,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

impl ExperimentReport {
    /// `(run_id, message)` for every flagged event.
    pub fn flagged(&self) -> Vec<(String, String)> {
        self.summaries.iter().flat_map(|s| s.flags.iter().map(|f| (s.row.run_id.clone(), f.clone()))).collect()
    }

    /// 0 when nothing was flagged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.flagged().is_empty() {
            0
        } else {
            2
        }
    }

    pub fn selections(&self, rule: WindowRule) -> BTreeMap<u64, Selection> {
        select_per_seed(&self.summaries, rule)
    }

    pub fn summary(&self, run_id: &str) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.row.run_id == run_id)
    }
}

pub fn trace_file(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_path.join(format!("trace_{}.csv", cfg.algorithm))
}

pub fn summary_file(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_path.join(format!("summary_{}.csv", cfg.algorithm))
}

/// Runs every configuration and seed, then writes `trace_<algo>.csv` and
/// `summary_<algo>.csv` into `cfg.output_path`.
pub fn run_experiment(cfg: &ExperimentConfig, registry: &ProblemRegistry) -> Result<ExperimentReport> {
    cfg.validate()?;
    let problem = registry.build(&cfg.problem, &cfg.settings)?;
    let x0 = Point::new(registry.start(&cfg.problem, problem.dim(), &cfg.settings)?)?;
    let ell = cfg.settings.ell.unwrap_or(problem.smoothness().ell);
    let runs = expand_runs(cfg, ell);
    log::info!("{} {} runs on `{}` with budget {}", runs.len(), cfg.algorithm, cfg.problem, cfg.budget);

    std::fs::create_dir_all(&cfg.output_path)
        .map_err(|e| Error::Io { path: cfg.output_path.display().to_string(), message: e.to_string() })?;
    let exec = Execution::from_workers(cfg.workers);
    let outputs =
        map_ordered(&runs, exec, |spec| run_one(&problem, cfg, spec, &x0))?.into_iter().collect::<Result<Vec<_>>>()?;

    let header = cfg.header_lines();
    let trace_path = trace_file(cfg);
    let summary_path = summary_file(cfg);
    output::write_trace_csv(&trace_path, &header, outputs.iter().flat_map(|o| o.rows.iter()))?;
    output::write_summary_csv(&summary_path, &header, outputs.iter().map(|o| &o.summary.row))?;
    Ok(ExperimentReport { summaries: outputs.into_iter().map(|o| o.summary).collect(), trace_path, summary_path })
}
