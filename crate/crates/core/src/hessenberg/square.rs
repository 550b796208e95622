use crate::error::{check_len, Error, Result};
use crate::hessenberg::pivot::{PivotSelector, PivotStrategy};
use crate::hessenberg::{scaled_copy, Breakdown, Start, StepProducts};
use crate::linops::vector::{axpy, inf_norm, sub};
use crate::linops::{CountedOperator, DenseMatrix, LinearOperator};
use crate::scalar::Scalar;

/// Square Hessenberg process with (sampled) partial pivoting.
#[derive(Clone, Debug)]
pub struct HessenbergState<T> {
    basis: Vec<Vec<T>>,
    /// Column `j` of `H` holds `j + 2` entries.
    hess: Vec<Vec<T>>,
    perm: Vec<usize>,
    beta: T,
    r0: Vec<T>,
    breakdown: Option<Breakdown>,
    selector: PivotSelector,
}

/// Starts the square process from `r0 = b − A·x0`.
pub fn init_square<T: Scalar>(
    a: &CountedOperator<'_, T>,
    b: &[T],
    x0: &[T],
    strategy: PivotStrategy,
) -> Result<Start<HessenbergState<T>>> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidArgument(format!(
            "square Hessenberg process needs a square operator, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    strategy.validate()?;
    check_len("init_square rhs", a.rows(), b.len())?;
    let ax0 = a.apply(x0)?;
    let r0 = sub(b, &ax0);
    if inf_norm(&r0) == T::zero() {
        return Ok(Start::ExactSolution);
    }
    let mut selector = PivotSelector::new(strategy);
    let mut perm: Vec<usize> = (0..r0.len()).collect();
    let pivot = selector
        .select(&r0, &perm)
        .filter(|p| p.value != T::zero())
        .or_else(|| super::pivot::full_pivot(&r0, &perm))
        .expect("nonzero residual has a nonzero entry");
    perm.swap(0, pivot.position);
    let beta = pivot.value;
    Ok(Start::Ready(HessenbergState {
        basis: vec![scaled_copy(&r0, beta)],
        hess: Vec::new(),
        perm,
        beta,
        r0,
        breakdown: None,
        selector,
    }))
}

impl<T: Scalar> HessenbergState<T> {
    /// Number of completed steps `k`.
    pub fn steps(&self) -> usize {
        self.hess.len()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn initial_residual(&self) -> &[T] {
        &self.r0
    }

    pub fn breakdown(&self) -> Option<Breakdown> {
        self.breakdown
    }

    pub fn is_breakdown(&self) -> bool {
        self.breakdown.is_some()
    }

    /// Pivot permutation `t`: entry `j` is the row index of the `j`-th pivot.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Basis columns `l_1, …` (one more than `steps()` unless broken down).
    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    /// `L` restricted to its first `cols` columns.
    pub fn basis_matrix(&self, cols: usize) -> DenseMatrix<T> {
        let cols = cols.min(self.basis.len());
        DenseMatrix::from_columns(self.perm.len(), &self.basis[..cols]).expect("basis columns share a length")
    }

    /// The `(k+1) × k` upper Hessenberg matrix.
    pub fn hessenberg(&self) -> DenseMatrix<T> {
        let k = self.steps();
        let mut h = DenseMatrix::zeros(k + 1, k);
        for (j, col) in self.hess.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                h[(i, j)] = v;
            }
        }
        h
    }

    /// Extends the basis by one vector.
    ///
    /// Returns `A·l_k` as computed before elimination.
    pub fn step(&mut self, a: &CountedOperator<'_, T>) -> Result<StepProducts<T>> {
        if self.breakdown.is_some() {
            return Err(Error::InvalidArgument("step after breakdown".into()));
        }
        let k = self.steps() + 1;
        let m = self.perm.len();
        let mut u = a.apply(&self.basis[k - 1])?;
        let forward = u.clone();
        let scale = inf_norm(&u);
        let mut column = Vec::with_capacity(k + 1);
        for j in 0..k {
            let h = u[self.perm[j]];
            column.push(h);
            axpy(-h, &self.basis[j], &mut u);
        }
        let pivot = if k < m {
            self.selector.elimination_pivot(&u, &self.perm[k..], scale)
        } else {
            None
        };
        match pivot {
            Some(p) => {
                column.push(p.value);
                self.perm.swap(k, k + p.position);
                self.basis.push(scaled_copy(&u, p.value));
            }
            None => {
                column.push(T::zero());
                self.breakdown = Some(Breakdown::DataSpace);
            }
        }
        self.hess.push(column);
        Ok(StepProducts {
            forward,
            transpose: None,
        })
    }

    /// `‖A·L_k − L_{k+1}·H_{k+1,k}‖_F` evaluated with uncounted products.
    pub fn relation_residual(&self, a: &dyn LinearOperator<T>) -> Result<T> {
        let k = self.steps();
        if k == 0 {
            return Ok(T::zero());
        }
        let lk = self.basis_matrix(k);
        let al = DenseMatrix::from_columns(
            a.rows(),
            &(0..k).map(|j| a.apply(lk.col(j))).collect::<Result<Vec<_>>>()?,
        )?;
        let h = self.hessenberg();
        // after breakdown the last row of H is zero and L_{k+1} has k columns
        let rhs = if self.basis.len() > k {
            self.basis_matrix(k + 1).matmul(&h)?
        } else {
            lk.matmul(&h.leading_rows(k))?
        };
        Ok(al.sub(&rhs)?.frobenius_norm())
    }
}
