use super::SmoothFunction;

/// `f(x) = 1/2 x^T A x + b^T x` with a dense symmetric `A` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Quadratic {
    /// `scale/2 * ||x||^2`.
    pub fn isotropic(dim: usize, scale: f64) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = scale;
        }
        Quadratic { dim, a, b: vec![0.0; dim] }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut q = Quadratic::isotropic(diag.len(), 0.0);
        for (i, &d) in diag.iter().enumerate() {
            q.a[i * q.dim + i] = d;
        }
        q
    }

    /// Panics unless `a` is a symmetric `dim x dim` matrix.
    pub fn dense(dim: usize, a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), dim * dim);
        assert_eq!(b.len(), dim);
        for i in 0..dim {
            for j in 0..i {
                assert!((a[i * dim + j] - a[j * dim + i]).abs() <= 1e-12, "A must be symmetric");
            }
        }
        Quadratic { dim, a, b }
    }

    fn mul(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.a[i * self.dim..(i + 1) * self.dim].iter().zip(v).map(|(a, v)| a * v).sum();
        }
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim];
        self.mul(x, &mut ax);
        x.iter().zip(&ax).zip(&self.b).map(|((x, ax), b)| 0.5 * x * ax + b * x).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.mul(x, out);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += b;
        }
    }

    fn hvp(&self, _x: &[f64], v: &[f64], out: &mut [f64]) {
        self.mul(v, out)
    }
}
