//! Stochastic first- and second-order oracles.
//!
//! A [`StochasticProblem`] knows its exact value, gradient and Hessian-vector
//! product, and how to draw minibatch estimates of the last two. [`Oracle`]
//! wraps a problem with call accounting; every optimizer in the crate talks
//! to the problem only through an `Oracle`.

mod finite_sum;
mod noise;
mod quadratic;
mod synthetic;
mod w_function;

use std::cell::Cell;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::operator::HessianOperator;
use crate::point::Point;
use crate::rng::NoiseRng;

pub use finite_sum::FiniteSumQuartic;
pub use noise::GaussianNoise;
pub use quadratic::Quadratic;
pub use synthetic::{make_synthetic_problem, WSaddle, SYNTHETIC_EPS_W, SYNTHETIC_F_STAR, SYNTHETIC_LEN_W};
pub use w_function::{w_breakpoints, w_function, w_piece, WEval};

/// Default dimension cap for dense Hessians.
pub const DEFAULT_HESSIAN_CAP: usize = 64;

/// Gradient- and Hessian-Lipschitz constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessParams {
    pub ell: f64,
    pub rho: f64,
}

impl SmoothnessParams {
    pub fn new(ell: f64, rho: f64) -> Result<Self> {
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidArgument(format!("ell must be > 0, got {ell}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
        }
        Ok(SmoothnessParams { ell, rho })
    }
}

/// Variance and almost-sure bounds of the stochastic gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl NoiseParams {
    pub fn new(sigma1: f64, sigma2: f64, m1: f64, m2: f64) -> Result<Self> {
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2), ("m1", m1), ("m2", m2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(NoiseParams { sigma1, sigma2, m1, m2 })
    }

    pub fn noiseless() -> Self {
        NoiseParams::default()
    }
}

/// Number of stochastic gradient and Hessian-vector product samples drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleCounter {
    pub gradient_samples: u64,
    pub hvp_samples: u64,
}

impl OracleCounter {
    pub fn total(&self) -> u64 {
        self.gradient_samples + self.hvp_samples
    }
}

/// A smooth deterministic function with analytic derivatives.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]);
}

/// `f(x) = E[f(x; xi)]` with sampling access to gradients and Hessian-vector
/// products plus exact hooks used for evaluation and testing.
pub trait StochasticProblem: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn smoothness(&self) -> SmoothnessParams;
    fn noise(&self) -> NoiseParams;

    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]);

    /// Averaged gradient of `batch` independent samples at `x`.
    fn sample_gradient(&self, x: &[f64], batch: usize, rng: &mut NoiseRng, out: &mut [f64]);

    /// Minibatch Hessian operator at `x` built from `batch` samples. Whether
    /// repeated applications reuse the same sample set or draw fresh noise is
    /// a property of the problem family.
    fn sample_hessian<'a>(&'a self, x: &[f64], batch: usize, rng: &mut NoiseRng) -> Box<dyn HessianOperator + 'a>;

    /// Known global minimum value, when available.
    fn optimal_value(&self) -> Option<f64> {
        None
    }
}

/// Problem handle with oracle-call accounting.
///
/// Each run owns its own `Oracle`; the problem itself is shared read-only.
pub struct Oracle {
    problem: Arc<dyn StochasticProblem>,
    counter: Cell<OracleCounter>,
    hessian_cap: usize,
}

impl Oracle {
    pub fn new(problem: Arc<dyn StochasticProblem>) -> Self {
        Oracle { problem, counter: Cell::new(OracleCounter::default()), hessian_cap: DEFAULT_HESSIAN_CAP }
    }

    pub fn with_hessian_cap(mut self, cap: usize) -> Self {
        self.hessian_cap = cap;
        self
    }

    pub fn problem(&self) -> &dyn StochasticProblem {
        &*self.problem
    }

    pub fn shared_problem(&self) -> Arc<dyn StochasticProblem> {
        Arc::clone(&self.problem)
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn counter(&self) -> OracleCounter {
        self.counter.get()
    }

    pub fn total_calls(&self) -> u64 {
        self.counter.get().total()
    }

    fn check_batch(batch: usize) -> Result<()> {
        if batch == 0 {
            Err(Error::InvalidArgument("batch size must be >= 1".into()))
        } else {
            Ok(())
        }
    }

    fn bump_gradient(&self, n: usize) {
        let mut c = self.counter.get();
        c.gradient_samples += n as u64;
        self.counter.set(c);
    }

    fn bump_hvp(&self, n: usize) {
        let mut c = self.counter.get();
        c.hvp_samples += n as u64;
        self.counter.set(c);
    }

    pub fn sample_gradient(&self, x: &[f64], batch: usize, rng: &mut NoiseRng) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        Self::check_batch(batch)?;
        let mut out = Point::zeros(self.dim());
        self.problem.sample_gradient(x, batch, rng, &mut out);
        self.bump_gradient(batch);
        Ok(out)
    }

    /// One averaged Hessian-vector product at `x` applied to `v`.
    pub fn sample_hvp(&self, x: &[f64], v: &[f64], batch: usize, rng: &mut NoiseRng) -> Result<Point> {
        let mut op = self.hessian_operator(x, batch, rng)?;
        check_dim(self.dim(), v.len())?;
        let mut out = Point::zeros(self.dim());
        op.apply(v, &mut out);
        Ok(out)
    }

    /// Minibatch Hessian operator at `x`; every application is charged
    /// `batch` Hessian-vector samples.
    pub fn hessian_operator(&self, x: &[f64], batch: usize, rng: &mut NoiseRng) -> Result<OracleHessian<'_>> {
        check_dim(self.dim(), x.len())?;
        Self::check_batch(batch)?;
        Ok(OracleHessian { inner: self.problem.sample_hessian(x, batch, rng), oracle: self, batch })
    }

    pub fn true_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.problem.value(x))
    }

    pub fn true_gradient(&self, x: &[f64]) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        let mut out = Point::zeros(self.dim());
        self.problem.gradient(x, &mut out);
        Ok(out)
    }

    pub fn true_hvp(&self, x: &[f64], v: &[f64]) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), v.len())?;
        let mut out = Point::zeros(self.dim());
        self.problem.hvp(x, v, &mut out);
        Ok(out)
    }

    /// Dense exact Hessian, symmetrized. Refused above the dimension cap.
    pub fn true_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim();
        if d > self.hessian_cap {
            return Err(Error::Unsupported(format!(
                "dense Hessian requested for d = {d} above cap {}",
                self.hessian_cap
            )));
        }
        let mut h = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            self.problem.hvp(x, &e, &mut col);
            for i in 0..d {
                h[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        Ok((&h + h.transpose()) * 0.5)
    }
}

/// Hessian operator handed out by an [`Oracle`]; charges the oracle on use.
pub struct OracleHessian<'a> {
    inner: Box<dyn HessianOperator + 'a>,
    oracle: &'a Oracle,
    batch: usize,
}

impl OracleHessian<'_> {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl HessianOperator for OracleHessian<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        self.inner.apply(v, out);
        self.oracle.bump_hvp(self.batch);
    }
}
