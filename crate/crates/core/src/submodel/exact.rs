//! Global minimizer of the cubic model for small dense problems.
//!
//! With `B = Q diag(lambda) Q^T`, every global minimizer has the form
//! `D(s) = -(B + s I)^{-1} g` with `s = rho/2 ||D||` and
//! `s >= max(0, -lambda_min)`. The scalar `s` is found by bisection on the
//! monotone secular function `||D(s)|| - 2 s / rho`; when `g` has no
//! component along the bottom eigenspace and the secular function is already
//! negative at the lower bound, the missing norm is supplied along the
//! bottom eigenvector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::point::{norm, Point};

pub const EXACT_SOLVE_MAX_DIM: usize = 64;

const SYMMETRY_TOL: f64 = 1e-10;

/// Minimizer of the cubic model together with its value and the norm of the
/// stationarity residual `g + B D + rho/2 ||D|| D`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodelSolution {
    pub delta: Point,
    pub value: f64,
    pub optimality_residual: f64,
    /// `rho/2 ||D||`, the shift making `B + shift I` positive semidefinite.
    pub multiplier: f64,
}

pub fn exact_solve(g: &[f64], hessian: &DMatrix<f64>, rho: f64) -> Result<SubmodelSolution> {
    let d = g.len();
    if d == 0 {
        return Err(Error::InvalidArgument("empty gradient".into()));
    }
    if d > EXACT_SOLVE_MAX_DIM {
        return Err(Error::Unsupported(format!("exact_solve limited to d <= {EXACT_SOLVE_MAX_DIM}, got {d}")));
    }
    if hessian.nrows() != d || hessian.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: hessian.nrows() });
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be > 0, got {rho}")));
    }
    if g.iter().chain(hessian.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("exact_solve input"));
    }
    let asym = (hessian - hessian.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }

    let sym = (hessian + hessian.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    let gv = DVector::from_column_slice(g);
    let mut gamma: Vec<f64> = (q.transpose() * &gv).iter().copied().collect();

    let lambda_min = lambdas[0];
    let low = (-lambda_min).max(0.0);
    let gnorm = norm(g);
    let scale = lambdas.iter().fold(0.0f64, |a, l| a.max(l.abs())).max(1.0);

    // Bottom eigenspace: eigenvalues numerically equal to lambda_min.
    let bottom: Vec<usize> = (0..d).filter(|&i| lambdas[i] - lambda_min <= 1e-12 * scale).collect();
    // Shifted denominators at s = low: lambda_i + low >= 0.
    let shifted: Vec<f64> = lambdas.iter().map(|&l| if low > 0.0 { l - lambda_min } else { l }).collect();
    if low > 0.0 {
        for &i in &bottom {
            if gamma[i].abs() <= 1e-14 * gnorm {
                gamma[i] = 0.0;
            }
        }
    }

    // ||D(low + t)||, skipping components that vanish identically.
    let step_norm = |t: f64| -> f64 {
        gamma
            .iter()
            .zip(&shifted)
            .filter(|(gm, _)| **gm != 0.0)
            .map(|(gm, sh)| {
                let c = gm / (sh + t);
                c * c
            })
            .sum::<f64>()
            .sqrt()
    };
    let secular = |t: f64| step_norm(t) - 2.0 * (low + t) / rho;

    let singular_at_low = gamma.iter().zip(&shifted).any(|(gm, sh)| *gm != 0.0 && *sh == 0.0);
    let hard = !singular_at_low && secular(0.0) <= 0.0;

    let coeffs: Vec<f64>;
    let shift: f64;
    if hard {
        shift = low;
        let mut c: Vec<f64> =
            gamma.iter().zip(&shifted).map(|(gm, sh)| if *gm == 0.0 { 0.0 } else { -gm / sh }).collect();
        let r = norm(&c);
        let target = 2.0 * low / rho;
        let tau = (target * target - r * r).max(0.0).sqrt();
        if tau > 0.0 {
            let k = bottom[0];
            let mut plus = c.clone();
            plus[k] += tau;
            c[k] -= tau;
            // Equal-value candidates: keep the lexicographically smaller one.
            let to_x = |cc: &[f64]| -> Vec<f64> { (&q * DVector::from_column_slice(cc)).iter().copied().collect() };
            let (xp, xm) = (to_x(&plus), to_x(&c));
            let pick_plus = xp.iter().zip(&xm).find(|(a, b)| a != b).map(|(a, b)| a < b).unwrap_or(false);
            if pick_plus {
                c = plus;
            }
        }
        coeffs = c;
    } else {
        let mut lo = 0.0f64;
        let mut hi = (0.5 * rho * gnorm).sqrt().max(1.0);
        while secular(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if secular(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = if lo > 0.0 && secular(lo).abs() < secular(hi).abs() { lo } else { hi };
        shift = low + t;
        coeffs = gamma.iter().zip(&shifted).map(|(gm, sh)| if *gm == 0.0 { 0.0 } else { -gm / (sh + t) }).collect();
    }

    let delta_v = &q * DVector::from_column_slice(&coeffs);
    let delta = Point::from(delta_v.as_slice());
    let bd = &sym * &delta_v;
    let dn = delta_v.norm();
    let resid = &gv + &bd + &delta_v * (0.5 * rho * dn);
    let value = gv.dot(&delta_v) + 0.5 * delta_v.dot(&bd) + rho / 6.0 * dn * dn * dn;
    Ok(SubmodelSolution { delta, value, optimality_residual: resid.norm(), multiplier: shift })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_oracle(g: f64, b: f64, rho: f64) -> (f64, f64) {
        // Stationary points of g D + b D^2/2 + rho/6 |D|^3 on each half-line,
        // by bisection; return the one with the lower value.
        let m = |x: f64| g * x + 0.5 * b * x * x + rho / 6.0 * x.abs().powi(3);
        let dm = |x: f64| g + b * x + 0.5 * rho * x.abs() * x;
        let mut best = (0.0, 0.0);
        for sign in [1.0, -1.0] {
            let (mut lo, mut hi) = (0.0, 0.0);
            let mut found = false;
            let mut prev = 0.0;
            let mut x = 1e-6;
            while x < 1e6 {
                if dm(sign * prev) * dm(sign * x) <= 0.0 {
                    lo = prev;
                    hi = x;
                    found = true;
                }
                prev = x;
                x *= 1.01;
            }
            if found {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if dm(sign * lo) * dm(sign * mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let root = sign * 0.5 * (lo + hi);
                if m(root) < best.1 {
                    best = (root, m(root));
                }
            }
        }
        best
    }

    #[test]
    fn scalar_instance_matches_bisection_oracle() {
        let (root, val) = scalar_oracle(0.001, -1.0, 1.0);
        let sol = exact_solve(&[0.001], &DMatrix::from_element(1, 1, -1.0), 1.0).unwrap();
        assert!((sol.delta[0] - root).abs() < 1e-9, "{} vs {root}", sol.delta[0]);
        assert!((sol.value - val).abs() < 1e-12);
        assert!((sol.delta[0] + 2.0010).abs() < 1e-4);
        assert!((sol.value + 0.6687).abs() < 1e-4);
    }

    #[test]
    fn zero_gradient_positive_definite() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let sol = exact_solve(&[0.0, 0.0, 0.0], &h, 1.0).unwrap();
        assert_eq!(sol.delta.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn hard_case_uses_bottom_eigenvector() {
        // g orthogonal to the negative-curvature direction.
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 2.0]));
        let sol = exact_solve(&[0.0, 0.5], &h, 1.0).unwrap();
        assert!(sol.optimality_residual < 1e-12);
        assert!((sol.delta.norm() - 2.0).abs() < 1e-12);
        assert!(sol.delta[0] < 0.0, "tie broken toward the lexicographically smaller point");
        assert!((sol.delta[1] + 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(exact_solve(&[1.0, 0.0], &h, 1.0), Err(Error::NotSymmetric(_))));
        let big = DMatrix::identity(65, 65);
        assert!(matches!(exact_solve(&[0.0; 65], &big, 1.0), Err(Error::Unsupported(_))));
        assert!(exact_solve(&[1.0], &DMatrix::identity(1, 1), 0.0).is_err());
    }
}
