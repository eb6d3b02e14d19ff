//! Experiment configuration: problem, algorithm, seeds, hyperparameter grids.
//!
//! Files are flat TOML: scalar settings at the top level and one array per
//! grid axis, either under a `[grid]` table or as `grid.<name>` keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Absolute tolerance on `f - f*` used to declare convergence.
pub const DEFAULT_TOLERANCE: f64 = 1.0 / 3750.0;
/// Inner subsolver iterations used by the experiment path.
pub const EXPERIMENT_INNER_ITERS: usize = 10;
pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Scr,
    Sgd,
    AdaGrad,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Scr, Algorithm::Sgd, Algorithm::AdaGrad];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Scr => "scr",
            Algorithm::Sgd => "sgd",
            Algorithm::AdaGrad => "adagrad",
        }
    }

    /// Hyperparameters accepted by this algorithm's grid.
    pub fn grid_keys(&self) -> &'static [&'static str] {
        match self {
            Algorithm::Scr => &["batch_grad", "batch_hvp", "inner_iters", "perturb_coeff", "step"],
            Algorithm::Sgd => &["batch", "step"],
            Algorithm::AdaGrad => &["adagrad_eps", "batch", "step"],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config { key: "algo".into(), message: format!("unknown algorithm `{s}`") })
    }
}

/// One grid value: a number, or `auto` for theory-driven batch sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Num(f64),
    Auto,
}

impl Param {
    pub fn num(&self) -> Option<f64> {
        match self {
            Param::Num(v) => Some(*v),
            Param::Auto => None,
        }
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Param::Auto);
        }
        s.parse::<f64>()
            .map(Param::Num)
            .map_err(|_| Error::InvalidArgument(format!("`{s}` is neither a number nor `auto`")))
    }
}

/// Keys whose values are integers.
pub(crate) fn is_integer_key(key: &str) -> bool {
    matches!(key, "batch" | "batch_grad" | "batch_hvp" | "inner_iters")
}

/// Settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub epsilon: f64,
    pub rho: f64,
    /// Overrides the problem's gradient Lipschitz constant when set.
    pub ell: Option<f64>,
    pub noise_std: f64,
    /// Problem dimension for problems that are not fixed-size.
    pub dim: Option<usize>,
    /// Seed for generated problem instances, shared by all runs.
    pub problem_seed: u64,
    pub tolerance: f64,
    pub early_termination: bool,
    pub x0: Option<Vec<f64>>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            epsilon: DEFAULT_EPSILON,
            rho: 1.0,
            ell: None,
            noise_std: 1.0,
            dim: None,
            problem_seed: 0,
            tolerance: DEFAULT_TOLERANCE,
            early_termination: true,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    /// Grid axes; the run set is the cartesian product of all axes and seeds.
    pub grids: BTreeMap<String, Vec<Param>>,
    pub budget: u64,
    /// Output directory for the trace and summary CSV files.
    pub output_path: PathBuf,
    pub settings: Settings,
    /// Worker pool width; `None` uses one worker per core.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, algorithm: Algorithm, output_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            problem: problem.to_string(),
            algorithm,
            seeds: vec![0],
            grids: BTreeMap::new(),
            budget: DEFAULT_BUDGET,
            output_path: output_path.into(),
            settings: Settings::default(),
            workers: None,
        }
    }

    /// Synthetic saddle problem with the full tuning grid of `algorithm`.
    pub fn saddle(algorithm: Algorithm, output_path: impl Into<PathBuf>) -> Self {
        let mut cfg = ExperimentConfig::new("synthetic", algorithm, output_path);
        cfg.grids = saddle_grid(algorithm);
        cfg
    }

    /// Applies every key of a TOML document on top of `self`.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config { key: "<file>".into(), message: e.message().to_string() })?;
        for (key, value) in &table {
            if key == "grid" {
                let grid = value.as_table().ok_or_else(|| bad(key, "expected a table"))?;
                for (name, values) in grid {
                    self.set_grid_value(name, values)?;
                }
            } else if let Some(name) = key.strip_prefix("grid.") {
                self.set_grid_value(name, value)?;
            } else {
                self.set_value(key, value)?;
            }
        }
        Ok(())
    }

    fn set_grid_value(&mut self, name: &str, value: &toml::Value) -> Result<()> {
        let key = format!("grid.{name}");
        let items: Vec<&toml::Value> = match value {
            toml::Value::Array(a) => a.iter().collect(),
            other => vec![other],
        };
        let params = items.into_iter().map(|v| toml_param(&key, v)).collect::<Result<Vec<_>>>()?;
        self.grids.insert(name.to_string(), params);
        Ok(())
    }

    fn set_value(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        let s = &mut self.settings;
        match key {
            "problem" => self.problem = toml_str(key, value)?.to_string(),
            "algo" | "algorithm" => self.algorithm = toml_str(key, value)?.parse()?,
            "seed" | "seeds" => {
                self.seeds = match value {
                    toml::Value::Array(a) => a.iter().map(|v| toml_u64(key, v)).collect::<Result<_>>()?,
                    v => vec![toml_u64(key, v)?],
                }
            }
            "budget" => self.budget = toml_u64(key, value)?,
            "out" | "output" => self.output_path = PathBuf::from(toml_str(key, value)?),
            "workers" => self.workers = Some(toml_u64(key, value)? as usize),
            "epsilon" => s.epsilon = toml_f64(key, value)?,
            "rho" => s.rho = toml_f64(key, value)?,
            "ell" => s.ell = Some(toml_f64(key, value)?),
            "noise_std" => s.noise_std = toml_f64(key, value)?,
            "dim" => s.dim = Some(toml_u64(key, value)? as usize),
            "problem_seed" => s.problem_seed = toml_u64(key, value)?,
            "tolerance" => s.tolerance = toml_f64(key, value)?,
            "early_termination" => {
                s.early_termination = value.as_bool().ok_or_else(|| bad(key, "expected a boolean"))?
            }
            "x0" => {
                let a = value.as_array().ok_or_else(|| bad(key, "expected an array"))?;
                s.x0 = Some(a.iter().map(|v| toml_f64(key, v)).collect::<Result<_>>()?);
            }
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(key, "must be positive and finite"))
            }
        };
        positive("epsilon", s.epsilon)?;
        positive("rho", s.rho)?;
        positive("tolerance", s.tolerance)?;
        if let Some(ell) = s.ell {
            positive("ell", ell)?;
        }
        if !(s.noise_std >= 0.0 && s.noise_std.is_finite()) {
            return Err(bad("noise_std", "must be finite and >= 0"));
        }
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        if self.budget == 0 {
            return Err(bad("budget", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(bad("workers", "must be positive"));
        }
        let allowed = self.algorithm.grid_keys();
        for (key, values) in &self.grids {
            let gkey = format!("grid.{key}");
            if !allowed.contains(&key.as_str()) {
                return Err(bad(
                    &gkey,
                    &format!("not a hyperparameter of {} (expected one of {})", self.algorithm, allowed.join(", ")),
                ));
            }
            if values.is_empty() {
                return Err(bad(&gkey, "empty value list"));
            }
            for v in values {
                check_param(&gkey, key, *v)?;
            }
        }
        Ok(())
    }

    /// Effective settings echoed as `# key = value` lines in the CSV files.
    pub fn header_lines(&self) -> Vec<(String, String)> {
        let s = &self.settings;
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
        let mut out = vec![
            ("problem".to_string(), self.problem.clone()),
            ("algo".to_string(), self.algorithm.to_string()),
            ("seeds".to_string(), format!("[{seeds}]")),
            ("budget".to_string(), self.budget.to_string()),
            ("epsilon".to_string(), super::output::format_real(s.epsilon)),
            ("rho".to_string(), super::output::format_real(s.rho)),
            ("ell".to_string(), s.ell.map_or("problem".into(), super::output::format_real)),
            ("noise_std".to_string(), super::output::format_real(s.noise_std)),
            ("dim".to_string(), s.dim.map_or("problem".into(), |d| d.to_string())),
            ("problem_seed".to_string(), s.problem_seed.to_string()),
            ("tolerance".to_string(), super::output::format_real(s.tolerance)),
            ("early_termination".to_string(), s.early_termination.to_string()),
        ];
        if let Some(x0) = &s.x0 {
            let v = x0.iter().map(|x| super::output::format_real(*x)).collect::<Vec<_>>().join(", ");
            out.push(("x0".into(), format!("[{v}]")));
        }
        for (key, values) in &self.grids {
            let v = values.iter().map(|p| format_param(key, *p)).collect::<Vec<_>>().join(", ");
            out.push((format!("grid.{key}"), format!("[{v}]")));
        }
        out
    }
}

/// The tuning grid used for the synthetic saddle comparison: batch sizes
/// {10, 30, 100, 300} and step sizes {1, 3} x 10^-i for i = 1..5, with the
/// gradient and Hessian batches of SCR tuned independently.
pub fn saddle_grid(algorithm: Algorithm) -> BTreeMap<String, Vec<Param>> {
    let batches: Vec<Param> = [10.0, 30.0, 100.0, 300.0].into_iter().map(Param::Num).collect();
    let steps: Vec<Param> = (1..=5)
        .flat_map(|i| [3, 1].map(|c| format!("{c}e-{i}")))
        .map(|s| Param::Num(s.parse().expect("literal step size")))
        .collect();
    let mut grid = BTreeMap::new();
    match algorithm {
        Algorithm::Scr => {
            grid.insert("batch_grad".to_string(), batches.clone());
            grid.insert("batch_hvp".to_string(), batches);
            grid.insert("inner_iters".to_string(), vec![Param::Num(EXPERIMENT_INNER_ITERS as f64)]);
        }
        Algorithm::Sgd | Algorithm::AdaGrad => {
            grid.insert("batch".to_string(), batches);
        }
    }
    grid.insert("step".to_string(), steps);
    grid
}

pub(crate) fn check_param(gkey: &str, key: &str, v: Param) -> Result<()> {
    match v {
        Param::Auto if matches!(key, "batch_grad" | "batch_hvp") => Ok(()),
        Param::Auto => Err(bad(gkey, "`auto` is only valid for SCR batch sizes")),
        Param::Num(x) if is_integer_key(key) => {
            if x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                Ok(())
            } else {
                Err(bad(gkey, &format!("{x} is not a positive integer")))
            }
        }
        Param::Num(x) if x > 0.0 && x.is_finite() => Ok(()),
        Param::Num(x) => Err(bad(gkey, &format!("{x} must be positive and finite"))),
    }
}

/// Canonical text for a parameter: integers plain, reals with 17
/// significant digits.
pub fn format_param(key: &str, v: Param) -> String {
    match v {
        Param::Auto => "auto".to_string(),
        Param::Num(x) if is_integer_key(key) => format!("{}", x as u64),
        Param::Num(x) => super::output::format_real(x),
    }
}

fn bad(key: &str, message: &str) -> Error {
    Error::Config { key: key.to_string(), message: message.to_string() }
}

fn toml_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "expected a string"))
}

fn toml_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn toml_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 && *f < u64::MAX as f64 => Ok(*f as u64),
        _ => Err(bad(key, "expected a non-negative integer")),
    }
}

fn toml_param(key: &str, v: &toml::Value) -> Result<Param> {
    match v {
        toml::Value::String(s) => s.parse().map_err(|_| bad(key, &format!("`{s}` is neither a number nor `auto`"))),
        other => toml_f64(key, other).map(Param::Num),
    }
}
