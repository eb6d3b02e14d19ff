//! Named problem constructors available to the harness.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::config::Settings;
use crate::error::{Error, Result};
use crate::oracle::{make_synthetic_problem, FiniteSumQuartic, GaussianNoise, Quadratic, StochasticProblem};

pub type ProblemBuilder = dyn Fn(&Settings) -> Result<Arc<dyn StochasticProblem>> + Send + Sync;
pub type StartBuilder = dyn Fn(usize) -> Vec<f64> + Send + Sync;

/// Default dimension for problems that are not fixed-size.
pub const DEFAULT_DIM: usize = 10;
/// Number of components in the generated finite-sum problem.
pub const QUARTIC_SUM_COMPONENTS: usize = 64;

pub struct ProblemEntry {
    pub description: String,
    builder: Arc<ProblemBuilder>,
    start: Arc<StartBuilder>,
}

#[derive(Default)]
pub struct ProblemRegistry {
    entries: BTreeMap<String, ProblemEntry>,
}

impl ProblemRegistry {
    pub fn empty() -> Self {
        ProblemRegistry::default()
    }

    /// `synthetic`, `quadratic` and `quartic-sum`.
    pub fn builtin() -> Self {
        let mut r = ProblemRegistry::empty();
        r.register_with_start(
            "synthetic",
            "w(x1) + 10 x2^2 with a strict saddle at the origin; Gaussian noise of std noise_std",
            |s| {
                if s.dim.is_some_and(|d| d != 2) {
                    return Err(Error::Config { key: "dim".into(), message: "synthetic is two-dimensional".into() });
                }
                Ok(make_synthetic_problem(s.noise_std, s.rho))
            },
            |d| vec![0.0; d],
        );
        r.register_with_start(
            "quadratic",
            "1/2 ||x||^2 in `dim` dimensions; Gaussian noise of std noise_std",
            |s| {
                let dim = s.dim.unwrap_or(DEFAULT_DIM);
                Ok(Arc::new(
                    GaussianNoise::new(Quadratic::isotropic(dim, 1.0), s.noise_std)
                        .with_smoothness(1.0, s.rho)
                        .with_name("quadratic")
                        .with_optimal_value(0.0),
                ))
            },
            |d| vec![1.0; d],
        );
        r.register(
            "quartic-sum",
            "finite sum of indefinite quadratics plus a quartic; minibatches sample components (noise_std unused)",
            |s| {
                let dim = s.dim.unwrap_or(DEFAULT_DIM);
                Ok(Arc::new(FiniteSumQuartic::generate(dim, QUARTIC_SUM_COMPONENTS, 0.5, s.problem_seed)))
            },
        );
        r
    }

    /// Registers a problem whose default start is the origin.
    pub fn register<F>(&mut self, name: &str, description: &str, builder: F)
    where
        F: Fn(&Settings) -> Result<Arc<dyn StochasticProblem>> + Send + Sync + 'static,
    {
        self.register_with_start(name, description, builder, |d| vec![0.0; d]);
    }

    pub fn register_with_start<F, S>(&mut self, name: &str, description: &str, builder: F, start: S)
    where
        F: Fn(&Settings) -> Result<Arc<dyn StochasticProblem>> + Send + Sync + 'static,
        S: Fn(usize) -> Vec<f64> + Send + Sync + 'static,
    {
        self.entries.insert(
            name.to_string(),
            ProblemEntry { description: description.to_string(), builder: Arc::new(builder), start: Arc::new(start) },
        );
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e.description.as_str()))
    }

    fn entry(&self, name: &str) -> Result<&ProblemEntry> {
        self.entries.get(name).ok_or_else(|| Error::Config {
            key: "problem".into(),
            message: format!(
                "unknown problem `{name}` (known: {})",
                self.entries.keys().cloned().collect::<Vec<_>>().join(", ")
            ),
        })
    }

    pub fn build(&self, name: &str, settings: &Settings) -> Result<Arc<dyn StochasticProblem>> {
        (self.entry(name)?.builder)(settings)
    }

    /// Start point: `settings.x0` when given, otherwise the problem default.
    pub fn start(&self, name: &str, dim: usize, settings: &Settings) -> Result<Vec<f64>> {
        match &settings.x0 {
            Some(x0) if x0.len() != dim => Err(Error::Config {
                key: "x0".into(),
                message: format!("expected {dim} coordinates, got {}", x0.len()),
            }),
            Some(x0) => Ok(x0.clone()),
            None => Ok((self.entry(name)?.start)(dim)),
        }
    }
}
