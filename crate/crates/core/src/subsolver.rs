//! Approximate minimization of the cubic model.
//!
//! [`cubic_subsolver`] takes a Cauchy step when the gradient is large and
//! otherwise runs a fixed number of gradient-descent iterations on a model
//! whose linear term carries a small random perturbation (which rules out
//! the degenerate case where `g` is orthogonal to the bottom eigenspace).
//! [`cubic_finalsolver`] runs plain gradient descent until the model gradient
//! drops below `epsilon / 2`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operator::HessianOperator;
use crate::point::{axpy, norm, Point};
use crate::rng::NoiseRng;
use crate::submodel::CubicSubmodel;

/// Multiplier in the default inner iteration count `ceil(K * ell / sqrt(rho * eps))`.
pub const DEFAULT_INNER_ITERS_COEFF: f64 = 20.0;
/// Multiplier in the final-solver cap `ceil(K * ell^2 / (rho * eps))`.
pub const FINAL_ITERS_COEFF: f64 = 40.0;

/// `ceil(20 * ell / sqrt(rho * eps))`.
pub fn default_inner_iters(ell: f64, rho: f64, epsilon: f64) -> usize {
    (DEFAULT_INNER_ITERS_COEFF * ell / (rho * epsilon).sqrt()).ceil().max(1.0) as usize
}

/// `ceil(k * ell / sqrt(rho * eps) * ln(1 + d / delta'))`, the iteration
/// count with the confidence factor written out.
pub fn inner_iters_with_confidence(k: f64, ell: f64, rho: f64, epsilon: f64, dim: usize, delta_prime: f64) -> usize {
    (k * ell / (rho * epsilon).sqrt() * (1.0 + dim as f64 / delta_prime).ln()).ceil().max(1.0) as usize
}

/// Perturbation coefficient `c'` reproducing the small perturbation used in
/// the convergence analysis of the gradient-descent subsolver:
/// `sigma = c3 rho^2 L^3 / (288 (2 ell + rho L))` with `L = sqrt(eps/rho)/2`,
/// expressed relative to `sqrt(eps rho) / ell`. Roughly `c3 * eps / 4608`
/// when `rho L` is small against `ell`, far below the default of 1.
pub fn proof_perturb_coeff(c3: f64, ell: f64, rho: f64, epsilon: f64) -> f64 {
    let l = 0.5 * (epsilon / rho).sqrt();
    let sigma = c3 * rho * rho * l.powi(3) / (288.0 * (2.0 * ell + rho * l));
    sigma * ell / (epsilon * rho).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolverConfig {
    pub ell: f64,
    pub rho: f64,
    pub epsilon: f64,
    /// Gradient-descent iterations per call.
    pub inner_iters: usize,
    /// `c'` in `sigma = c' sqrt(eps rho) / ell`.
    pub perturb_coeff: f64,
    /// `eta`, defaults to `1 / (20 ell)`.
    pub step_size: f64,
    /// Iteration cap of the final solver.
    pub final_max_iters: usize,
}

impl SubsolverConfig {
    pub fn new(ell: f64, rho: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("ell", ell), ("rho", rho), ("epsilon", epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
            }
        }
        let final_cap = (FINAL_ITERS_COEFF * ell * ell / (rho * epsilon)).ceil().min(u32::MAX as f64) as usize;
        Ok(SubsolverConfig {
            ell,
            rho,
            epsilon,
            inner_iters: default_inner_iters(ell, rho, epsilon),
            perturb_coeff: 1.0,
            step_size: 1.0 / (20.0 * ell),
            final_max_iters: final_cap.max(1),
        })
    }

    pub fn with_inner_iters(mut self, iters: usize) -> Self {
        self.inner_iters = iters.max(1);
        self
    }

    pub fn with_perturb_coeff(mut self, c: f64) -> Self {
        self.perturb_coeff = c;
        self
    }

    pub fn with_step_size(mut self, eta: f64) -> Self {
        if eta > 1.0 / (20.0 * self.ell) {
            log::debug!("subsolver step size {eta} exceeds 1/(20 ell) = {}", 1.0 / (20.0 * self.ell));
        }
        self.step_size = eta;
        self
    }

    pub fn with_final_max_iters(mut self, cap: usize) -> Self {
        self.final_max_iters = cap.max(1);
        self
    }

    /// Gradient norm at or above which the Cauchy step is taken.
    pub fn cauchy_threshold(&self) -> f64 {
        self.ell * self.ell / self.rho
    }

    /// `sigma = c' sqrt(eps rho) / ell`.
    pub fn perturbation_radius(&self) -> f64 {
        self.perturb_coeff * (self.epsilon * self.rho).sqrt() / self.ell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    CauchyStep,
    GradientDescent,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::CauchyStep => "cauchy",
            Branch::GradientDescent => "gd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolverOutcome {
    pub delta: Point,
    /// Model value at `delta`, computed with the unperturbed gradient.
    pub delta_m: f64,
    pub branch: Branch,
    pub iterations_used: usize,
    pub hvp_queries: u64,
}

/// Uniform draw from the unit sphere (normalized Gaussian, redrawn on zero).
pub fn unit_sphere(dim: usize, rng: &mut NoiseRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn check_shared_rho<H: HessianOperator>(model: &CubicSubmodel<H>, cfg: &SubsolverConfig) -> Result<()> {
    if model.rho() != cfg.rho {
        return Err(Error::InvalidArgument(format!(
            "model rho {} differs from subsolver rho {}",
            model.rho(),
            cfg.rho
        )));
    }
    Ok(())
}

pub fn cubic_subsolver<H: HessianOperator>(
    model: &mut CubicSubmodel<H>,
    cfg: &SubsolverConfig,
    rng: &mut NoiseRng,
) -> Result<SubsolverOutcome> {
    check_shared_rho(model, cfg)?;
    let start_queries = model.hvp_queries();
    let d = model.dim();
    let g = model.g().clone();
    let gnorm = g.norm();

    let (delta, branch, iterations_used) = if gnorm >= cfg.cauchy_threshold() {
        let rc = model.cauchy_radius()?;
        let delta: Vec<f64> = g.iter().map(|gi| -rc * gi / gnorm).collect();
        (delta, Branch::CauchyStep, 0)
    } else {
        let sigma = cfg.perturbation_radius();
        let zeta = unit_sphere(d, rng);
        let g_tilde: Vec<f64> = g.iter().zip(&zeta).map(|(gi, zi)| gi + sigma * zi).collect();
        let eta = cfg.step_size;
        let mut delta = vec![0.0; d];
        let mut step = vec![0.0; d];
        for _ in 0..cfg.inner_iters {
            model.apply_hvp(&delta, &mut step);
            let r = 0.5 * cfg.rho * norm(&delta);
            for ((s, gt), di) in step.iter_mut().zip(&g_tilde).zip(&delta) {
                *s += gt + r * di;
            }
            axpy(-eta, &step, &mut delta);
        }
        (delta, Branch::GradientDescent, cfg.inner_iters)
    };

    let delta_m = model.value(&delta)?;
    Ok(SubsolverOutcome {
        delta: Point::from(delta),
        delta_m,
        branch,
        iterations_used,
        hvp_queries: model.hvp_queries() - start_queries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalStatus {
    Converged,
    /// Iteration cap reached; the returned displacement is the best seen.
    CapExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalSolve {
    pub delta: Point,
    pub status: FinalStatus,
    pub iterations: usize,
    /// Model-gradient norm at the returned displacement.
    pub gradient_norm: f64,
    pub hvp_queries: u64,
}

/// Gradient descent from zero until `||grad m|| <= eps / 2` or
/// `cfg.final_max_iters` steps.
pub fn cubic_finalsolver<H: HessianOperator>(
    model: &mut CubicSubmodel<H>,
    cfg: &SubsolverConfig,
) -> Result<FinalSolve> {
    cubic_finalsolver_capped(model, cfg, cfg.final_max_iters)
}

/// Final solver with an explicit iteration cap (used to respect an oracle budget).
pub fn cubic_finalsolver_capped<H: HessianOperator>(
    model: &mut CubicSubmodel<H>,
    cfg: &SubsolverConfig,
    max_iters: usize,
) -> Result<FinalSolve> {
    check_shared_rho(model, cfg)?;
    let start_queries = model.hvp_queries();
    let d = model.dim();
    let tol = 0.5 * cfg.epsilon;
    let eta = cfg.step_size;

    let mut delta = vec![0.0; d];
    let mut gm = model.g().to_vec();
    let mut gm_norm = norm(&gm);
    let mut best = (delta.clone(), gm_norm);
    let mut iters = 0;
    while gm_norm > tol {
        if iters >= max_iters || !gm_norm.is_finite() {
            return Ok(FinalSolve {
                delta: Point::from(best.0),
                status: FinalStatus::CapExhausted,
                iterations: iters,
                gradient_norm: best.1,
                hvp_queries: model.hvp_queries() - start_queries,
            });
        }
        axpy(-eta, &gm, &mut delta);
        model.gradient_into(&delta, &mut gm);
        gm_norm = norm(&gm);
        iters += 1;
        if gm_norm < best.1 {
            best = (delta.clone(), gm_norm);
        }
    }
    Ok(FinalSolve {
        delta: Point::from(delta),
        status: FinalStatus::Converged,
        iterations: iters,
        gradient_norm: gm_norm,
        hvp_queries: model.hvp_queries() - start_queries,
    })
}
