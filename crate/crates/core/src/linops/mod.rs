//! Matrix-free operators, per-solve operation accounting and the small dense
//! kernels used for every projected problem.

mod counters;
mod dense;
pub mod kernels;
mod sparse;
pub mod vector;

pub use counters::{CounterSnapshot, CountedOperator, OpCounters};
pub use dense::DenseMatrix;
pub use kernels::{dense_qr_ls, spectral_condition_number, stacked_tikhonov_ls, PivotedQr};
pub use sparse::CsrMatrix;

use crate::error::{check_len, Result};
use crate::scalar::Scalar;

/// A linear map `A: Rⁿ → Rᵐ` accessible only through products with `A` and `Aᵀ`.
///
/// Implementations may assume slice lengths match `cols`/`rows`; the checked
/// entry points are [`LinearOperator::apply`] and the counted wrapper.
pub trait LinearOperator<T: Scalar>: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// Writes `A·x` into `y`.
    fn apply_into(&self, x: &[T], y: &mut [T]);

    /// Writes `Aᵀ·y` into `x`.
    fn apply_transpose_into(&self, y: &[T], x: &mut [T]);

    /// Uncounted, dimension-checked forward product.
    fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("LinearOperator::apply", self.cols(), x.len())?;
        let mut y = vec![T::zero(); self.rows()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// Uncounted, dimension-checked transpose product.
    fn apply_transpose(&self, y: &[T]) -> Result<Vec<T>> {
        check_len("LinearOperator::apply_transpose", self.rows(), y.len())?;
        let mut x = vec![T::zero(); self.cols()];
        self.apply_transpose_into(y, &mut x);
        Ok(x)
    }

    fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }
}

impl<T: Scalar, O: LinearOperator<T> + ?Sized> LinearOperator<T> for Box<O> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        (**self).apply_into(x, y)
    }
    fn apply_transpose_into(&self, y: &[T], x: &mut [T]) {
        (**self).apply_transpose_into(y, x)
    }
}

/// The `n × n` identity.
#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator {
    pub n: usize,
}

impl<T: Scalar> LinearOperator<T> for IdentityOperator {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
    fn apply_transpose_into(&self, y: &[T], x: &mut [T]) {
        x.copy_from_slice(y);
    }
}

/// Materializes an operator column by column. Intended for tests and small
/// diagnostics only.
pub fn assemble_dense<T: Scalar>(op: &dyn LinearOperator<T>) -> DenseMatrix<T> {
    let (m, n) = (op.rows(), op.cols());
    let mut out = DenseMatrix::zeros(m, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        op.apply_into(&e, out.col_mut(j));
        e[j] = T::zero();
    }
    out
}
