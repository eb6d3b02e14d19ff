//! Hessian-vector product operators.
//!
//! Solvers only ever see a Hessian through [`HessianOperator::apply`]; the
//! dense implementation exists for tests and the exact reference solver.

use nalgebra::DMatrix;

/// A (possibly noisy) linear operator `v -> B[v]`.
pub trait HessianOperator {
    fn dim(&self) -> usize;

    /// Writes `B[v]` into `out`. Noisy operators may return a fresh sample on
    /// every call.
    fn apply(&mut self, v: &[f64], out: &mut [f64]);
}

impl<T: HessianOperator + ?Sized> HessianOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        (**self).apply(v, out)
    }
}

/// Dense symmetric matrix operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        DenseOperator { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        DenseOperator::new(DMatrix::identity(dim, dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        DenseOperator::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl HessianOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        let n = self.matrix.nrows();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum();
        }
    }
}

/// Operator backed by a closure.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnOperator { dim, f }
    }
}

impl<F: FnMut(&[f64], &mut [f64])> HessianOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        (self.f)(v, out)
    }
}

/// Materializes an operator column by column. Test and reference use only.
pub fn materialize(op: &mut dyn HessianOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}
