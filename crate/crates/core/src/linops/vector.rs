//! Vector helpers that never form inner products.
//!
//! The `diagnostic_*` functions do compute inner products; they exist for
//! tests and trace diagnostics and are intentionally excluded from
//! [`OpCounters`](crate::linops::OpCounters).

use crate::scalar::Scalar;

/// `y ← y + alpha·x`.
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for v in x {
        *v *= alpha;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Largest magnitude, `0` for an empty slice.
pub fn inf_norm<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

/// Linear combination `Σ coeffs[j]·columns[j]` of equally long vectors.
pub fn combine<T: Scalar>(len: usize, columns: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); len];
    for (c, &a) in columns.iter().zip(coeffs) {
        axpy(a, c, &mut out);
    }
    out
}

/// Uncounted inner product for diagnostics and tests.
pub fn diagnostic_dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Uncounted Euclidean norm for diagnostics and tests.
pub fn diagnostic_norm<T: Scalar>(a: &[T]) -> T {
    // scaled accumulation avoids overflow for badly scaled residuals
    let amax = inf_norm(a);
    if amax == T::zero() || !amax.is_finite() {
        return amax;
    }
    amax * a.iter().map(|&v| (v / amax) * (v / amax)).sum::<T>().sqrt()
}
