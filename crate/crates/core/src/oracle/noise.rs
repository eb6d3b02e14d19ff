use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::{NoiseParams, SmoothFunction, SmoothnessParams, StochasticProblem};
use crate::operator::HessianOperator;
use crate::rng::NoiseRng;

/// Additive Gaussian noise on top of a smooth function.
///
/// Every gradient sample and every Hessian-vector product sample receives
/// fresh i.i.d. `N(0, std^2)` noise per component. The average of `batch`
/// samples therefore carries `N(0, std^2 / batch)` noise, which is drawn
/// directly instead of summing `batch` draws.
pub struct GaussianNoise<F> {
    f: F,
    std: f64,
    smoothness: SmoothnessParams,
    name: String,
    optimal_value: Option<f64>,
}

impl<F: SmoothFunction> GaussianNoise<F> {
    pub fn new(f: F, std: f64) -> Self {
        assert!(std >= 0.0 && std.is_finite(), "noise std must be finite and >= 0");
        GaussianNoise {
            f,
            std,
            smoothness: SmoothnessParams { ell: 1.0, rho: 1.0 },
            name: "gaussian".into(),
            optimal_value: None,
        }
    }

    pub fn with_smoothness(mut self, ell: f64, rho: f64) -> Self {
        self.smoothness = SmoothnessParams { ell, rho };
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_optimal_value(mut self, f_star: f64) -> Self {
        self.optimal_value = Some(f_star);
        self
    }

    pub fn inner(&self) -> &F {
        &self.f
    }

    pub fn std(&self) -> f64 {
        self.std
    }
}

fn add_noise(out: &mut [f64], scale: f64, rng: &mut NoiseRng) {
    if scale > 0.0 {
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *o += scale * z;
        }
    }
}

impl<F: SmoothFunction> StochasticProblem for GaussianNoise<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn smoothness(&self) -> SmoothnessParams {
        self.smoothness
    }

    /// `sigma1 = sigma2 = std * sqrt(d)`; Gaussian noise has no almost-sure
    /// bound, so `m1 = m2 = 0` and the variance terms drive batch sizing.
    fn noise(&self) -> NoiseParams {
        let s = self.std * (self.dim() as f64).sqrt();
        NoiseParams { sigma1: s, sigma2: s, m1: 0.0, m2: 0.0 }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.f.value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.f.gradient(x, out)
    }

    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.f.hvp(x, v, out)
    }

    fn sample_gradient(&self, x: &[f64], batch: usize, rng: &mut NoiseRng, out: &mut [f64]) {
        self.f.gradient(x, out);
        add_noise(out, self.std / (batch as f64).sqrt(), rng);
    }

    fn sample_hessian<'a>(&'a self, x: &[f64], batch: usize, rng: &mut NoiseRng) -> Box<dyn HessianOperator + 'a> {
        Box::new(NoisyHvp {
            f: &self.f,
            x: x.to_vec(),
            scale: self.std / (batch as f64).sqrt(),
            rng: NoiseRng::from_rng(rng),
        })
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }
}

struct NoisyHvp<'a, F> {
    f: &'a F,
    x: Vec<f64>,
    scale: f64,
    rng: NoiseRng,
}

impl<F: SmoothFunction> HessianOperator for NoisyHvp<'_, F> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        self.f.hvp(&self.x, v, out);
        add_noise(out, self.scale, &mut self.rng);
    }
}
