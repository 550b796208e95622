//! Inner-product-free Krylov bases.
//!
//! The square process builds `A·L_k = L_{k+1}·H_{k+1,k}` with `L` unit lower
//! triangular up to a row permutation. The generalized process handles
//! rectangular operators through the coupled relations
//! `A·L_k = D_{k+1}·H_{k+1,k}` and `Aᵀ·D_{k+1} = L_{k+1}·W_{k+1}`.
//! Expansion coefficients are read off by indexing at pivot positions, so no
//! inner product is ever formed.

mod generalized;
mod pivot;
mod square;

pub use generalized::{init_generalized, GeneralizedHessenbergState};
pub use pivot::{full_pivot, pivot_select, Pivot, PivotKind, PivotSelector, PivotStrategy};
pub use square::{init_square, HessenbergState};

/// Outcome of initializing a process from `r0 = b − A·x0`.
#[derive(Debug)]
pub enum Start<S> {
    Ready(S),
    /// `r0 = 0`: the starting guess already solves the system.
    ExactSolution,
    /// `Aᵀ·r0 = 0`: the starting guess already solves the normal equations.
    NormalEquationsSolved,
}

impl<S> Start<S> {
    pub fn ready(self) -> Option<S> {
        match self {
            Start::Ready(s) => Some(s),
            _ => None,
        }
    }
}

/// Why a recurrence stopped growing its basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Breakdown {
    /// No admissible pivot for the new data-space (or square-case) vector.
    DataSpace,
    /// No admissible pivot for the new solution-space vector.
    SolutionSpace,
}

/// Vectors produced by one step before elimination.
#[derive(Clone, Debug)]
pub struct StepProducts<T> {
    /// `A·l_k`.
    pub forward: Vec<T>,
    /// `Aᵀ·d_{k+1}` (generalized process only, absent after a data-space breakdown).
    pub transpose: Option<Vec<T>>,
}

pub(crate) fn scaled_copy<T: crate::Scalar>(v: &[T], inv: T) -> Vec<T> {
    v.iter().map(|&x| x / inv).collect()
}
