//! First-order baselines charged under the same oracle accounting as SCR.

use crate::error::{check_dim, Error, Result};
use crate::oracle::Oracle;
use crate::point::Point;
use crate::rng::{stream, NoiseRng};
use crate::trace::{RunTrace, TraceEvent, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Sgd,
    AdaGrad,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConfig {
    pub step_size: f64,
    pub batch: usize,
    /// Oracle budget; a step is taken only if its batch fits.
    pub max_calls: u64,
    pub variant: Variant,
    pub adagrad_eps: f64,
}

impl FirstOrderConfig {
    pub fn sgd(step_size: f64, batch: usize, max_calls: u64) -> Self {
        FirstOrderConfig { step_size, batch, max_calls, variant: Variant::Sgd, adagrad_eps: 1e-8 }
    }

    pub fn adagrad(step_size: f64, batch: usize, max_calls: u64) -> Self {
        FirstOrderConfig { variant: Variant::AdaGrad, ..FirstOrderConfig::sgd(step_size, batch, max_calls) }
    }

    fn validate(&self, expected: Variant) -> Result<()> {
        if self.variant != expected {
            return Err(Error::InvalidArgument(format!("expected {expected:?} config, got {:?}", self.variant)));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be >= 0, got {}", self.step_size)));
        }
        if self.batch == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(self.adagrad_eps > 0.0) {
            return Err(Error::InvalidArgument("adagrad_eps must be > 0".into()));
        }
        Ok(())
    }
}

/// `x <- x - step * g` with `g` a minibatch gradient, until the budget runs out.
pub fn sgd_run(oracle: &Oracle, cfg: &FirstOrderConfig, x0: &Point, seed: u64) -> Result<RunTrace> {
    cfg.validate(Variant::Sgd)?;
    first_order(oracle, cfg, x0, seed, |x, g, _| {
        for (xi, gi) in x.iter_mut().zip(g.iter()) {
            *xi -= cfg.step_size * gi;
        }
    })
}

/// `s <- s + g*g`, `x <- x - step * g / (sqrt(s) + eps)` per coordinate.
pub fn adagrad_run(oracle: &Oracle, cfg: &FirstOrderConfig, x0: &Point, seed: u64) -> Result<RunTrace> {
    cfg.validate(Variant::AdaGrad)?;
    first_order(oracle, cfg, x0, seed, |x, g, acc| {
        for ((xi, gi), si) in x.iter_mut().zip(g.iter()).zip(acc.iter_mut()) {
            *si += gi * gi;
            *xi -= cfg.step_size * gi / (si.sqrt() + cfg.adagrad_eps);
        }
    })
}

fn first_order<F>(oracle: &Oracle, cfg: &FirstOrderConfig, x0: &Point, seed: u64, mut update: F) -> Result<RunTrace>
where
    F: FnMut(&mut Point, &Point, &mut [f64]),
{
    check_dim(oracle.dim(), x0.dim())?;
    let mut rng: NoiseRng = stream(seed, 0);
    let mut x = x0.clone();
    let mut acc = vec![0.0; x.dim()];
    let mut trace = RunTrace::default();
    trace.push(TraceRecord {
        iter: 0,
        total_oracle_calls: oracle.total_calls(),
        true_f: oracle.true_value(&x)?,
        extra: None,
        branch: None,
    });
    let mut step = 0u64;
    while oracle.total_calls() + cfg.batch as u64 <= cfg.max_calls {
        let g = oracle.sample_gradient(&x, cfg.batch, &mut rng)?;
        update(&mut x, &g, &mut acc);
        step += 1;
        let f = oracle.true_value(&x)?;
        trace.push(TraceRecord {
            iter: step,
            total_oracle_calls: oracle.total_calls(),
            true_f: f,
            extra: None,
            branch: None,
        });
        if !x.is_finite() || !f.is_finite() {
            trace.events.push(TraceEvent::Diverged { iter: step });
            break;
        }
    }
    Ok(trace)
}
