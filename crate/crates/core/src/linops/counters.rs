use std::cell::Cell;

use crate::error::{check_len, Result};
use crate::linops::LinearOperator;
use crate::scalar::Scalar;

/// Per-solve operation tallies.
///
/// Counters are deliberately not `Sync`: a solve is single threaded, and
/// concurrent solves share the read-only operator while each owns its tally.
/// Only products with the operator, sketch applications and inner products of
/// operator-sized vectors are counted; the dense projected solves are not.
#[derive(Debug, Default)]
pub struct OpCounters {
    matvecs: Cell<u64>,
    tmatvecs: Cell<u64>,
    dots: Cell<u64>,
    sketches: Cell<u64>,
}

/// Plain copy of [`OpCounters`] at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub matvec_count: u64,
    pub transpose_matvec_count: u64,
    pub dot_product_count: u64,
    pub sketch_apply_count: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            matvec_count: self.matvecs.get(),
            transpose_matvec_count: self.tmatvecs.get(),
            dot_product_count: self.dots.get(),
            sketch_apply_count: self.sketches.get(),
        }
    }

    pub(crate) fn bump_matvec(&self) {
        self.matvecs.set(self.matvecs.get() + 1);
    }

    pub(crate) fn bump_tmatvec(&self) {
        self.tmatvecs.set(self.tmatvecs.get() + 1);
    }

    pub(crate) fn bump_sketch(&self) {
        self.sketches.set(self.sketches.get() + 1);
    }

    /// Counted inner product.
    pub fn dot<T: Scalar>(&self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        self.dots.set(self.dots.get() + 1);
        a.iter().zip(b).map(|(&x, &y)| x * y).sum()
    }

    /// Counted Euclidean norm (one inner product).
    pub fn norm<T: Scalar>(&self, a: &[T]) -> T {
        self.dot(a, a).sqrt()
    }
}

/// An operator paired with the tally of the solve that uses it.
pub struct CountedOperator<'a, T: Scalar> {
    op: &'a dyn LinearOperator<T>,
    counters: &'a OpCounters,
}

impl<'a, T: Scalar> CountedOperator<'a, T> {
    pub fn new(op: &'a dyn LinearOperator<T>, counters: &'a OpCounters) -> Self {
        Self { op, counters }
    }

    pub fn rows(&self) -> usize {
        self.op.rows()
    }

    pub fn cols(&self) -> usize {
        self.op.cols()
    }

    pub fn counters(&self) -> &'a OpCounters {
        self.counters
    }

    pub fn inner(&self) -> &'a dyn LinearOperator<T> {
        self.op
    }

    /// `A·x`, incrementing the forward product count.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("apply", self.op.cols(), x.len())?;
        let mut y = vec![T::zero(); self.op.rows()];
        self.op.apply_into(x, &mut y);
        self.counters.bump_matvec();
        Ok(y)
    }

    /// `Aᵀ·y`, incrementing the transpose product count.
    pub fn apply_transpose(&self, y: &[T]) -> Result<Vec<T>> {
        check_len("apply_transpose", self.op.rows(), y.len())?;
        let mut x = vec![T::zero(); self.op.cols()];
        self.op.apply_transpose_into(y, &mut x);
        self.counters.bump_tmatvec();
        Ok(x)
    }
}
