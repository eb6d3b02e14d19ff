//! Two-dimensional saddle-escape benchmark `f(x) = w(x1) + 10 x2^2`.

use std::sync::Arc;

use super::noise::GaussianNoise;
use super::w_function::w_function;
use super::{SmoothFunction, StochasticProblem};

pub const SYNTHETIC_EPS_W: f64 = 0.01;
pub const SYNTHETIC_LEN_W: f64 = 5.0;
/// Global minimum value `-2/375`, attained at `(±3/5, 0)`.
pub const SYNTHETIC_F_STAR: f64 = -2.0 / 375.0;

/// Weight of the quadratic coordinate.
const X2_WEIGHT: f64 = 10.0;

/// Deterministic part of the synthetic problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WSaddle {
    pub eps_w: f64,
    pub len_w: f64,
}

impl Default for WSaddle {
    fn default() -> Self {
        WSaddle { eps_w: SYNTHETIC_EPS_W, len_w: SYNTHETIC_LEN_W }
    }
}

impl WSaddle {
    pub fn optimal_value(&self) -> f64 {
        let s = self.eps_w.sqrt();
        -(3.0 * self.len_w + 1.0) * self.eps_w * s / 3.0
    }
}

impl SmoothFunction for WSaddle {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        w_function(x[0], self.eps_w, self.len_w).value + X2_WEIGHT * x[1] * x[1]
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = w_function(x[0], self.eps_w, self.len_w).d1;
        out[1] = 2.0 * X2_WEIGHT * x[1];
    }

    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        out[0] = w_function(x[0], self.eps_w, self.len_w).d2 * v[0];
        out[1] = 2.0 * X2_WEIGHT * v[1];
    }
}

/// Synthetic problem with i.i.d. `N(0, noise_std^2)` noise added to every
/// component of every gradient and Hessian-vector product sample.
///
/// Uses `eps_w = 0.01`, `L = 5`, gradient-Lipschitz constant 20 on the
/// region of interest and Hessian-Lipschitz constant `rho` (default 1).
pub fn make_synthetic_problem(noise_std: f64, rho: f64) -> Arc<dyn StochasticProblem> {
    Arc::new(
        GaussianNoise::new(WSaddle::default(), noise_std)
            .with_smoothness(2.0 * X2_WEIGHT, rho)
            .with_name("synthetic")
            .with_optimal_value(SYNTHETIC_F_STAR),
    )
}
