use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{NoiseParams, SmoothnessParams, StochasticProblem};
use crate::operator::HessianOperator;
use crate::rng::{stream, NoiseRng};

/// Finite sum `f(x) = 1/N sum_i [1/2 x^T A_i x + b_i^T x] + mu/4 ||x||^4`.
///
/// The mean matrix has one negative eigenvalue, so the origin neighbourhood
/// holds a strict saddle while the quartic term keeps `f` bounded below.
/// A sampled Hessian operator freezes its index set: repeated applications
/// within one outer iteration see the same minibatch.
pub struct FiniteSumQuartic {
    dim: usize,
    mats: Vec<DMatrix<f64>>,
    vecs: Vec<DVector<f64>>,
    mean_mat: DMatrix<f64>,
    mean_vec: DVector<f64>,
    mu: f64,
    noise: NoiseParams,
    smoothness: SmoothnessParams,
}

impl FiniteSumQuartic {
    /// Random instance with `n_components` terms, generated from `seed`.
    pub fn generate(dim: usize, n_components: usize, spread: f64, seed: u64) -> Self {
        assert!(dim >= 1 && n_components >= 1);
        let mut rng = stream(seed, 0x5eed);
        let gauss = |rng: &mut NoiseRng| -> f64 { StandardNormal.sample(rng) };

        let raw = DMatrix::from_fn(dim, dim, |_, _| gauss(&mut rng));
        let q = raw.qr().q();
        let eigs = DVector::from_fn(dim, |i, _| if dim == 1 { -1.0 } else { -1.0 + 3.0 * i as f64 / (dim - 1) as f64 });
        let base = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
        let base_vec = DVector::from_fn(dim, |_, _| 0.1 * gauss(&mut rng));

        let mut mats = Vec::with_capacity(n_components);
        let mut vecs = Vec::with_capacity(n_components);
        for _ in 0..n_components {
            let e = DMatrix::from_fn(dim, dim, |_, _| gauss(&mut rng)) * (spread / (dim as f64).sqrt());
            mats.push(&base + (&e + e.transpose()) * 0.5);
            vecs.push(&base_vec + DVector::from_fn(dim, |_, _| spread * gauss(&mut rng)));
        }
        let n = n_components as f64;
        let mean_mat = mats.iter().fold(DMatrix::zeros(dim, dim), |acc, m| acc + m) / n;
        let mean_vec = vecs.iter().fold(DVector::zeros(dim), |acc, v| acc + v) / n;

        let sigma1 = (vecs.iter().map(|v| (v - &mean_vec).norm_squared()).sum::<f64>() / n).sqrt();
        let sigma2 = mats.iter().map(|m| (m - &mean_mat).norm()).fold(0.0, f64::max);
        let m1 = vecs.iter().map(|v| (v - &mean_vec).norm()).fold(0.0, f64::max);
        let mu = 1.0;
        let spec = mean_mat.clone().symmetric_eigenvalues().iter().fold(0.0f64, |a, e| a.max(e.abs()));
        // Local constants on the unit ball, where the quartic term adds 3 mu to
        // the curvature and 6 mu to the third derivative.
        let smoothness = SmoothnessParams { ell: spec + sigma2 + 3.0 * mu, rho: 6.0 * mu };

        FiniteSumQuartic {
            dim,
            mats,
            vecs,
            mean_mat,
            mean_vec,
            mu,
            noise: NoiseParams { sigma1, sigma2, m1, m2: sigma2 },
            smoothness,
        }
    }

    pub fn n_components(&self) -> usize {
        self.mats.len()
    }

    fn component_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.mats[i] * x + &self.vecs[i]
    }

    fn quartic_gradient(&self, x: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        for (o, xi) in out.iter_mut().zip(x) {
            *o += self.mu * r2 * xi;
        }
    }

    fn quartic_hvp(mu: f64, x: &[f64], v: &[f64], out: &mut [f64]) {
        let r2: f64 = x.iter().map(|a| a * a).sum();
        let xv: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
        for ((o, xi), vi) in out.iter_mut().zip(x).zip(v) {
            *o += mu * (r2 * vi + 2.0 * xv * xi);
        }
    }
}

impl StochasticProblem for FiniteSumQuartic {
    fn name(&self) -> String {
        "quartic-sum".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> SmoothnessParams {
        self.smoothness
    }

    fn noise(&self) -> NoiseParams {
        self.noise
    }

    fn value(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let r2 = xv.norm_squared();
        0.5 * xv.dot(&(&self.mean_mat * &xv)) + self.mean_vec.dot(&xv) + 0.25 * self.mu * r2 * r2
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let g = &self.mean_mat * &xv + &self.mean_vec;
        out.copy_from_slice(g.as_slice());
        self.quartic_gradient(x, out);
    }

    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let hv = &self.mean_mat * DVector::from_column_slice(v);
        out.copy_from_slice(hv.as_slice());
        Self::quartic_hvp(self.mu, x, v, out);
    }

    fn sample_gradient(&self, x: &[f64], batch: usize, rng: &mut NoiseRng, out: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let mut acc = DVector::zeros(self.dim);
        for _ in 0..batch {
            let i = rng.random_range(0..self.mats.len());
            acc += self.component_gradient(i, &xv);
        }
        acc /= batch as f64;
        out.copy_from_slice(acc.as_slice());
        self.quartic_gradient(x, out);
    }

    fn sample_hessian<'a>(&'a self, x: &[f64], batch: usize, rng: &mut NoiseRng) -> Box<dyn HessianOperator + 'a> {
        let mut mat = DMatrix::zeros(self.dim, self.dim);
        for _ in 0..batch {
            mat += &self.mats[rng.random_range(0..self.mats.len())];
        }
        mat /= batch as f64;
        Box::new(FrozenHessian { mat, x: x.to_vec(), mu: self.mu })
    }
}

/// Minibatch Hessian with a fixed index set, plus the exact quartic part.
struct FrozenHessian {
    mat: DMatrix<f64>,
    x: Vec<f64>,
    mu: f64,
}

impl HessianOperator for FrozenHessian {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        let hv = &self.mat * DVector::from_column_slice(v);
        out.copy_from_slice(hv.as_slice());
        FiniteSumQuartic::quartic_hvp(self.mu, &self.x, v, out);
    }
}
