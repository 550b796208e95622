use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SolverRng};
use crate::scalar::Scalar;

/// How elimination pivots are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotKind {
    /// Largest magnitude over every admissible index.
    Full,
    /// Largest magnitude over a random subset of the admissible indices,
    /// redrawn at each selection.
    Sampled { sample_size: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PivotStrategy {
    pub kind: PivotKind,
    pub seed: u64,
}

impl PivotStrategy {
    pub fn full() -> Self {
        Self {
            kind: PivotKind::Full,
            seed: 0,
        }
    }

    pub fn sampled(sample_size: usize, seed: u64) -> Self {
        Self {
            kind: PivotKind::Sampled { sample_size },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PivotKind::Sampled { sample_size: 0 } => {
                Err(Error::InvalidArgument("pivot sample size must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

impl Default for PivotStrategy {
    fn default() -> Self {
        Self::full()
    }
}

/// Selected pivot: `index` into the vector, its `position` within the
/// admissible list, and the entry itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pivot<T> {
    pub position: usize,
    pub index: usize,
    pub value: T,
}

/// Stateful pivot chooser owning the sampling stream.
#[derive(Clone, Debug)]
pub struct PivotSelector {
    strategy: PivotStrategy,
    rng: SolverRng,
}

fn better<T: Scalar>(cand: T, cand_idx: usize, best: T, best_idx: usize) -> bool {
    let (a, b) = (cand.abs(), best.abs());
    a > b || (a == b && cand_idx < best_idx)
}

/// Largest `|v(i)|` over `admissible`, smallest index on ties.
///
/// Returns `None` only for an empty admissible list; an all-zero candidate
/// set yields a pivot whose value is zero.
pub fn full_pivot<T: Scalar>(v: &[T], admissible: &[usize]) -> Option<Pivot<T>> {
    let mut best: Option<Pivot<T>> = None;
    for (position, &index) in admissible.iter().enumerate() {
        let value = v[index];
        match best {
            Some(b) if !better(value, index, b.value, b.index) => {}
            _ => {
                best = Some(Pivot {
                    position,
                    index,
                    value,
                })
            }
        }
    }
    best
}

impl PivotSelector {
    pub fn new(strategy: PivotStrategy) -> Self {
        Self {
            strategy,
            rng: rng_from_seed(strategy.seed),
        }
    }

    pub fn strategy(&self) -> PivotStrategy {
        self.strategy
    }

    /// Picks a pivot according to the strategy.
    ///
    /// A sample at least as large as the admissible set falls through to the
    /// full search without consuming randomness.
    pub fn select<T: Scalar>(&mut self, v: &[T], admissible: &[usize]) -> Option<Pivot<T>> {
        match self.strategy.kind {
            PivotKind::Full => full_pivot(v, admissible),
            PivotKind::Sampled { sample_size } => {
                if sample_size >= admissible.len() {
                    return full_pivot(v, admissible);
                }
                let mut best: Option<Pivot<T>> = None;
                for position in sample(&mut self.rng, admissible.len(), sample_size.max(1)).into_iter() {
                    let index = admissible[position];
                    let value = v[index];
                    match best {
                        Some(b) if !better(value, index, b.value, b.index) => {}
                        _ => {
                            best = Some(Pivot {
                                position,
                                index,
                                value,
                            })
                        }
                    }
                }
                best
            }
        }
    }

    /// Pivot for an elimination step, or `None` when the remaining entries are
    /// negligible relative to `scale`.
    ///
    /// A sampled pivot below the threshold triggers one full search before
    /// breakdown is declared, so an unlucky sample never ends the recurrence.
    pub(crate) fn elimination_pivot<T: Scalar>(&mut self, v: &[T], admissible: &[usize], scale: T) -> Option<Pivot<T>> {
        let threshold = T::rank_tol() * scale;
        let p = self.select(v, admissible)?;
        if p.value.abs() > threshold {
            return Some(p);
        }
        if matches!(self.strategy.kind, PivotKind::Sampled { .. }) {
            let p = full_pivot(v, admissible)?;
            if p.value.abs() > threshold {
                return Some(p);
            }
        }
        None
    }
}

/// One-shot selection with a fresh sampling stream seeded from the strategy.
pub fn pivot_select<T: Scalar>(v: &[T], admissible: &[usize], strategy: PivotStrategy) -> Option<Pivot<T>> {
    PivotSelector::new(strategy).select(v, admissible)
}
