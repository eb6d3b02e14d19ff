//! The cubic-regularized local model
//! `m(D) = D^T g + 1/2 D^T B[D] + rho/6 ||D||^3`.

use crate::error::{check_dim, Error, Result};
use crate::operator::HessianOperator;
use crate::point::{dot, norm, Point};

mod exact;

pub use exact::{exact_solve, SubmodelSolution, EXACT_SOLVE_MAX_DIM};

/// Frozen gradient estimate, Hessian operator and cubic weight of one outer
/// iteration. The operator is only ever applied, never materialized.
pub struct CubicSubmodel<H> {
    g: Point,
    hvp: H,
    rho: f64,
    hvp_queries: u64,
    scratch: Vec<f64>,
}

impl<H: HessianOperator> CubicSubmodel<H> {
    pub fn new(g: Point, hvp: H, rho: f64) -> Result<Self> {
        check_dim(g.dim(), hvp.dim())?;
        if !g.is_finite() {
            return Err(Error::NonFinite("submodel gradient"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
        }
        let d = g.dim();
        Ok(CubicSubmodel { g, hvp, rho, hvp_queries: 0, scratch: vec![0.0; d] })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn g(&self) -> &Point {
        &self.g
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Number of operator applications made through this model.
    pub fn hvp_queries(&self) -> u64 {
        self.hvp_queries
    }

    pub fn operator_mut(&mut self) -> &mut H {
        &mut self.hvp
    }

    /// `B[v]` into `out`, counted.
    pub fn apply_hvp(&mut self, v: &[f64], out: &mut [f64]) {
        self.hvp.apply(v, out);
        self.hvp_queries += 1;
    }

    /// Submodel value at `delta`; one operator application.
    pub fn value(&mut self, delta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), delta.len())?;
        let mut bd = std::mem::take(&mut self.scratch);
        self.apply_hvp(delta, &mut bd);
        let v = cubic_value(&self.g, &bd, delta, self.rho);
        self.scratch = bd;
        Ok(v)
    }

    /// `g + B[delta] + rho/2 ||delta|| delta`; one operator application.
    pub fn gradient(&mut self, delta: &[f64]) -> Result<Point> {
        check_dim(self.dim(), delta.len())?;
        let mut out = Point::zeros(self.dim());
        self.gradient_into(delta, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&mut self, delta: &[f64], out: &mut [f64]) {
        self.apply_hvp(delta, out);
        let r = 0.5 * self.rho * norm(delta);
        for ((o, gi), di) in out.iter_mut().zip(self.g.iter()).zip(delta) {
            *o += gi + r * di;
        }
    }

    /// Norm of the minimizer of the model restricted to the line through
    /// `-g`; one operator application.
    pub fn cauchy_radius(&mut self) -> Result<f64> {
        let gn = self.g.norm();
        if gn == 0.0 {
            return Err(Error::InvalidArgument("Cauchy radius undefined for zero gradient".into()));
        }
        let g = self.g.clone();
        let mut bg = std::mem::take(&mut self.scratch);
        self.apply_hvp(&g, &mut bg);
        let curv = dot(&g, &bg) / (self.rho * gn * gn);
        self.scratch = bg;
        Ok(-curv + (curv * curv + 2.0 * gn / self.rho).sqrt())
    }
}

/// `g^T d + 1/2 d^T bd + rho/6 ||d||^3` given a precomputed `bd = B[d]`.
pub fn cubic_value(g: &[f64], bd: &[f64], d: &[f64], rho: f64) -> f64 {
    let n = norm(d);
    dot(g, d) + 0.5 * dot(d, bd) + rho / 6.0 * n * n * n
}
