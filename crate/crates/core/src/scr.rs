//! Stochastic cubic regularization outer loop.

use crate::error::{check_dim, Error, Result};
use crate::oracle::{NoiseParams, Oracle, OracleCounter, SmoothnessParams};
use crate::point::Point;
use crate::rng::stream;
use crate::submodel::CubicSubmodel;
use crate::subsolver::{cubic_finalsolver_capped, cubic_subsolver, FinalSolve, FinalStatus, SubsolverConfig};
use crate::trace::{RunTrace, TraceEvent, TraceRecord};

/// Absolute ceiling on outer iterations.
pub const MAX_OUTER_ITERS_CAP: usize = 1_000_000;
/// Concentration constant used for automatic batch sizes.
pub const AUTO_BATCH_C: f64 = 0.01;

/// Minibatch size: fixed, or derived from the noise bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Fixed(usize),
    Auto,
}

/// Unrounded gradient and Hessian batch requirements.
pub fn batch_requirements(
    noise: &NoiseParams,
    epsilon: f64,
    rho: f64,
    dim: usize,
    delta_prime: f64,
    c: f64,
) -> (f64, f64) {
    let log_term = 8.0 / 3.0 * (2.0 * dim as f64 / delta_prime).ln();
    let t1 = c * epsilon;
    let t2 = c * (rho * epsilon).sqrt();
    let n1 = (noise.m1 / t1).max(noise.sigma1 * noise.sigma1 / (t1 * t1)) * log_term;
    let n2 = (noise.m2 / t2).max(noise.sigma2 * noise.sigma2 / (t2 * t2)) * log_term;
    (n1, n2)
}

/// Gradient and Hessian-vector minibatch sizes that make the averaged
/// estimates concentrate within `c * eps` and `c * sqrt(rho * eps)` with
/// probability `1 - delta'` (matrix Bernstein). Both are at least 1.
pub fn batch_sizes(
    noise: &NoiseParams,
    epsilon: f64,
    rho: f64,
    dim: usize,
    delta_prime: f64,
    c: f64,
) -> (usize, usize) {
    let (n1, n2) = batch_requirements(noise, epsilon, rho, dim, delta_prime, c);
    let round = |n: f64| if n.is_finite() { (n.ceil() as usize).max(1) } else { usize::MAX };
    (round(n1), round(n2))
}

/// `min(ceil(100 sqrt(rho) df / eps^1.5), 10^6)`.
pub fn default_outer_iters(rho: f64, epsilon: f64, delta_f: f64) -> usize {
    let t = (100.0 * rho.sqrt() * delta_f / epsilon.powf(1.5)).ceil();
    if t.is_finite() {
        (t as usize).clamp(1, MAX_OUTER_ITERS_CAP)
    } else {
        MAX_OUTER_ITERS_CAP
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScrConfig {
    pub epsilon: f64,
    /// Overall failure probability.
    pub delta: f64,
    pub max_outer_iters: usize,
    pub smoothness: SmoothnessParams,
    pub noise: NoiseParams,
    pub batch_grad: BatchSize,
    pub batch_hvp: BatchSize,
    pub subsolver: SubsolverConfig,
    /// Early termination fires when `delta_m >= -coeff * sqrt(eps^3 / rho)`.
    pub termination_coeff: f64,
    /// Optional oracle budget; an iteration is only started if it fits.
    pub max_oracle_calls: Option<u64>,
    /// When false the termination test is skipped and the loop runs until
    /// `max_outer_iters` or the budget is exhausted.
    pub early_termination: bool,
}

impl ScrConfig {
    pub fn new(epsilon: f64, smoothness: SmoothnessParams, noise: NoiseParams) -> Result<Self> {
        let subsolver = SubsolverConfig::new(smoothness.ell, smoothness.rho, epsilon)?;
        Ok(ScrConfig {
            epsilon,
            delta: 0.1,
            max_outer_iters: default_outer_iters(smoothness.rho, epsilon, 1.0),
            smoothness,
            noise,
            batch_grad: BatchSize::Auto,
            batch_hvp: BatchSize::Auto,
            subsolver,
            termination_coeff: 0.01,
            max_oracle_calls: None,
            early_termination: true,
        })
    }

    pub fn with_batches(mut self, grad: BatchSize, hvp: BatchSize) -> Self {
        self.batch_grad = grad;
        self.batch_hvp = hvp;
        self
    }

    pub fn with_subsolver(mut self, subsolver: SubsolverConfig) -> Self {
        self.subsolver = subsolver;
        self
    }

    pub fn with_max_outer_iters(mut self, t: usize) -> Self {
        self.max_outer_iters = t;
        self
    }

    pub fn with_budget(mut self, calls: u64) -> Self {
        self.max_oracle_calls = Some(calls);
        self
    }

    pub fn with_early_termination(mut self, on: bool) -> Self {
        self.early_termination = on;
        self
    }

    pub fn termination_threshold(&self) -> f64 {
        -self.termination_coeff * (self.epsilon.powi(3) / self.smoothness.rho).sqrt()
    }

    /// Resolved `(n1, n2)` for a problem of dimension `dim`.
    pub fn resolved_batches(&self, dim: usize) -> (usize, usize) {
        let delta_prime = self.delta / (3.0 * self.max_outer_iters as f64);
        let (a1, a2) = batch_sizes(&self.noise, self.epsilon, self.smoothness.rho, dim, delta_prime, AUTO_BATCH_C);
        let pick = |b: BatchSize, auto: usize| match b {
            BatchSize::Fixed(n) => n,
            BatchSize::Auto => auto,
        };
        (pick(self.batch_grad, a1), pick(self.batch_hvp, a2))
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be > 0".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument("delta must lie in (0, 1)".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidArgument("max_outer_iters must be >= 1".into()));
        }
        if !(self.termination_coeff > 0.0) {
            return Err(Error::InvalidArgument("termination_coeff must be > 0".into()));
        }
        if self.subsolver.rho != self.smoothness.rho {
            return Err(Error::InvalidArgument("subsolver rho differs from smoothness rho".into()));
        }
        for b in [self.batch_grad, self.batch_hvp] {
            if b == BatchSize::Fixed(0) {
                return Err(Error::InvalidArgument("batch size must be >= 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScrResult {
    pub point: Point,
    pub terminated_early: bool,
    pub outer_iters: usize,
    pub counter: OracleCounter,
    pub trace: RunTrace,
    pub final_solve: Option<FinalSolve>,
    /// `(n1, n2)` actually used.
    pub batches: (usize, usize),
}

/// Runs the outer loop from `x0`. Iteration `t` draws its samples from the
/// stream `(seed, t)`.
///
/// The true objective recorded in the trace is measured outside the oracle
/// budget and never influences the iterates.
pub fn scr_run(oracle: &Oracle, x0: &Point, cfg: &ScrConfig, seed: u64) -> Result<ScrResult> {
    cfg.validate()?;
    check_dim(oracle.dim(), x0.dim())?;
    let (n1, n2) = cfg.resolved_batches(oracle.dim());
    let rho = cfg.smoothness.rho;
    let threshold = cfg.termination_threshold();
    let worst_iter_cost = n1 as u64 + n2 as u64 * (cfg.subsolver.inner_iters as u64 + 2);

    let mut x = x0.clone();
    let mut trace = RunTrace::default();
    trace.push(TraceRecord {
        iter: 0,
        total_oracle_calls: oracle.total_calls(),
        true_f: oracle.true_value(&x)?,
        extra: None,
        branch: None,
    });

    let mut outer = 0;
    let mut final_solve = None;
    let mut terminated_early = false;
    for t in 0..=cfg.max_outer_iters {
        if let Some(budget) = cfg.max_oracle_calls {
            if oracle.total_calls() + worst_iter_cost > budget {
                break;
            }
        }
        let mut rng = stream(seed, t as u64);
        let g = oracle.sample_gradient(&x, n1, &mut rng)?;
        let op = oracle.hessian_operator(&x, n2, &mut rng)?;
        let mut model = CubicSubmodel::new(g, op, rho)?;
        let out = cubic_subsolver(&mut model, &cfg.subsolver, &mut rng)?;
        outer = t + 1;

        if !out.delta.is_finite() || !out.delta_m.is_finite() {
            trace.events.push(TraceEvent::Diverged { iter: outer as u64 });
            break;
        }

        if cfg.early_termination && out.delta_m >= threshold {
            let cap = match cfg.max_oracle_calls {
                Some(budget) => {
                    let left = budget.saturating_sub(oracle.total_calls()) / n2 as u64;
                    cfg.subsolver.final_max_iters.min(left as usize)
                }
                None => cfg.subsolver.final_max_iters,
            };
            let fin = cubic_finalsolver_capped(&mut model, &cfg.subsolver, cap)?;
            drop(model);
            if fin.status == FinalStatus::CapExhausted {
                trace
                    .events
                    .push(TraceEvent::FinalSolverCapExhausted { iter: outer as u64, gradient_norm: fin.gradient_norm });
            }
            for (xi, di) in x.iter_mut().zip(fin.delta.iter()) {
                *xi += di;
            }
            trace.push(TraceRecord {
                iter: outer as u64,
                total_oracle_calls: oracle.total_calls(),
                true_f: oracle.true_value(&x)?,
                extra: Some(out.delta_m),
                branch: Some(out.branch),
            });
            final_solve = Some(fin);
            terminated_early = true;
            break;
        }
        drop(model);

        for (xi, di) in x.iter_mut().zip(out.delta.iter()) {
            *xi += di;
        }
        trace.push(TraceRecord {
            iter: outer as u64,
            total_oracle_calls: oracle.total_calls(),
            true_f: oracle.true_value(&x)?,
            extra: Some(out.delta_m),
            branch: Some(out.branch),
        });
    }

    Ok(ScrResult {
        point: x,
        terminated_early,
        outer_iters: outer,
        counter: oracle.counter(),
        trace,
        final_solve,
        batches: (n1, n2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{make_synthetic_problem, GaussianNoise, Quadratic};
    use std::sync::Arc;

    #[test]
    fn batch_size_examples() {
        let noise = NoiseParams::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let (n1, n2) = batch_sizes(&noise, 0.1, 1.0, 2, 0.01, 0.005);
        let expected = (4.0e6_f64 * 8.0 / 3.0 * 400f64.ln()).ceil() as usize;
        assert_eq!(n1, expected);
        assert_eq!(n1, 63_908_956);
        assert_eq!(n2, 1);
        assert_eq!(batch_sizes(&NoiseParams::noiseless(), 0.1, 1.0, 2, 0.01, 0.005), (1, 1));
    }

    #[test]
    fn termination_boundary() {
        let s = SmoothnessParams::new(1.0, 1.0).unwrap();
        let cfg = ScrConfig::new(0.01, s, NoiseParams::noiseless()).unwrap();
        assert!((cfg.termination_threshold() + 1e-5).abs() < 1e-20);
        assert!(-1e-5 >= cfg.termination_threshold());
    }

    #[test]
    fn convex_quadratic_terminates_quickly() {
        let oracle =
            Oracle::new(Arc::new(GaussianNoise::new(Quadratic::isotropic(2, 1.0), 0.0).with_smoothness(1.0, 1.0)));
        let s = SmoothnessParams::new(1.0, 1.0).unwrap();
        let cfg = ScrConfig::new(1e-3, s, NoiseParams::noiseless()).unwrap();
        let res = scr_run(&oracle, &Point::from(vec![1.0, 1.0]), &cfg, 0).unwrap();
        assert!(res.terminated_early);
        // The cubic term shortens each Newton step, so a few iterations are needed.
        assert!(res.outer_iters <= 6, "outer iters {}", res.outer_iters);
        assert!(oracle.true_gradient(&res.point).unwrap().norm() <= 1e-3);
        assert_eq!(res.batches, (1, 1));
    }

    #[test]
    fn budget_is_respected_and_accounted() {
        let oracle = Oracle::new(make_synthetic_problem(1.0, 1.0));
        let s = SmoothnessParams::new(20.0, 1.0).unwrap();
        let sub = SubsolverConfig::new(20.0, 1.0, 1e-3).unwrap().with_inner_iters(10).with_step_size(0.01);
        let cfg = ScrConfig::new(1e-3, s, NoiseParams::noiseless())
            .unwrap()
            .with_subsolver(sub)
            .with_batches(BatchSize::Fixed(30), BatchSize::Fixed(10))
            .with_budget(10_000)
            .with_max_outer_iters(1_000_000)
            .with_early_termination(false);
        let res = scr_run(&oracle, &Point::zeros(2), &cfg, 5).unwrap();
        let per_iter = 30 + 10 * 11;
        assert_eq!(res.counter.total(), oracle.total_calls());
        assert!(res.counter.total() <= 10_000);
        assert!(res.counter.total() + per_iter as u64 + 10 > 10_000);
        assert_eq!(res.counter.gradient_samples, 30 * res.outer_iters as u64);
        assert_eq!(res.counter.hvp_samples, 10 * 11 * res.outer_iters as u64);
    }

    #[test]
    fn deterministic_replay() {
        let run = || {
            let oracle = Oracle::new(make_synthetic_problem(1.0, 1.0));
            let s = SmoothnessParams::new(20.0, 1.0).unwrap();
            let sub = SubsolverConfig::new(20.0, 1.0, 1e-3).unwrap().with_inner_iters(10).with_step_size(0.01);
            let cfg = ScrConfig::new(1e-3, s, NoiseParams::noiseless())
                .unwrap()
                .with_subsolver(sub)
                .with_batches(BatchSize::Fixed(10), BatchSize::Fixed(10))
                .with_budget(50_000);
            scr_run(&oracle, &Point::zeros(2), &cfg, 42).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_configs() {
        let oracle = Oracle::new(make_synthetic_problem(0.0, 1.0));
        let s = SmoothnessParams::new(20.0, 1.0).unwrap();
        let mut cfg = ScrConfig::new(1e-3, s, NoiseParams::noiseless()).unwrap();
        cfg.delta = 1.5;
        assert!(scr_run(&oracle, &Point::zeros(2), &cfg, 0).is_err());
        let cfg = ScrConfig::new(1e-3, s, NoiseParams::noiseless()).unwrap();
        assert!(matches!(scr_run(&oracle, &Point::zeros(3), &cfg, 0), Err(Error::DimensionMismatch { .. })));
        let cfg = cfg.with_batches(BatchSize::Fixed(0), BatchSize::Auto);
        assert!(scr_run(&oracle, &Point::zeros(2), &cfg, 0).is_err());
    }
}
