use crate::error::{check_len, Result};
use crate::hessenberg::pivot::{full_pivot, PivotSelector, PivotStrategy};
use crate::hessenberg::{scaled_copy, Breakdown, Start, StepProducts};
use crate::linops::vector::{axpy, inf_norm, sub};
use crate::linops::{CountedOperator, DenseMatrix, LinearOperator};
use crate::scalar::Scalar;
use crate::Error;

/// Generalized Hessenberg process for rectangular operators.
///
/// After `k` steps the state holds `D_{k+1}` (data space), `L_{k+1}`
/// (solution space), the `(k+1) × k` Hessenberg `H` and the
/// `(k+1) × (k+1)` upper-triangular `W`.
#[derive(Clone, Debug)]
pub struct GeneralizedHessenbergState<T> {
    data_basis: Vec<Vec<T>>,
    sol_basis: Vec<Vec<T>>,
    hess: Vec<Vec<T>>,
    /// Column `j` of `W` holds `j + 1` entries.
    tri: Vec<Vec<T>>,
    t: Vec<usize>,
    g: Vec<usize>,
    beta: T,
    alpha: T,
    r0: Vec<T>,
    breakdown: Option<Breakdown>,
    selector: PivotSelector,
}

fn first_pivot<T: Scalar>(
    selector: &mut PivotSelector,
    v: &[T],
    perm: &[usize],
) -> crate::hessenberg::Pivot<T> {
    selector
        .select(v, perm)
        .filter(|p| p.value != T::zero())
        .or_else(|| full_pivot(v, perm))
        .expect("nonzero vector has a nonzero entry")
}

/// Starts the generalized process from `r0 = b − A·x0` and `v0 = Aᵀ·r0`.
pub fn init_generalized<T: Scalar>(
    a: &CountedOperator<'_, T>,
    b: &[T],
    x0: &[T],
    strategy: PivotStrategy,
) -> Result<Start<GeneralizedHessenbergState<T>>> {
    strategy.validate()?;
    check_len("init_generalized rhs", a.rows(), b.len())?;
    let ax0 = a.apply(x0)?;
    let r0 = sub(b, &ax0);
    if inf_norm(&r0) == T::zero() {
        return Ok(Start::ExactSolution);
    }
    let mut selector = PivotSelector::new(strategy);
    let mut t: Vec<usize> = (0..a.rows()).collect();
    let p = first_pivot(&mut selector, &r0, &t);
    t.swap(0, p.position);
    let beta = p.value;
    let d1 = scaled_copy(&r0, beta);

    let v0 = a.apply_transpose(&r0)?;
    if inf_norm(&v0) == T::zero() {
        return Ok(Start::NormalEquationsSolved);
    }
    let mut g: Vec<usize> = (0..a.cols()).collect();
    let p = first_pivot(&mut selector, &v0, &g);
    g.swap(0, p.position);
    let alpha = p.value;
    let l1 = scaled_copy(&v0, alpha);
    // Aᵀ·d₁ = v0/β, whose entry at g(1) is α/β
    let w11 = alpha / beta;
    Ok(Start::Ready(GeneralizedHessenbergState {
        data_basis: vec![d1],
        sol_basis: vec![l1],
        hess: Vec::new(),
        tri: vec![vec![w11]],
        t,
        g,
        beta,
        alpha,
        r0,
        breakdown: None,
        selector,
    }))
}

impl<T: Scalar> GeneralizedHessenbergState<T> {
    pub fn steps(&self) -> usize {
        self.hess.len()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn alpha(&self) -> T {
        self.alpha
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

    /// Data-space pivot list `t`.
    pub fn data_permutation(&self) -> &[usize] {
        &self.t
    }

    /// Solution-space pivot list `g`.
    pub fn solution_permutation(&self) -> &[usize] {
        &self.g
    }

    pub fn data_basis(&self) -> &[Vec<T>] {
        &self.data_basis
    }

    pub fn solution_basis(&self) -> &[Vec<T>] {
        &self.sol_basis
    }

    pub fn data_basis_matrix(&self, cols: usize) -> DenseMatrix<T> {
        let cols = cols.min(self.data_basis.len());
        DenseMatrix::from_columns(self.t.len(), &self.data_basis[..cols]).expect("columns share a length")
    }

    pub fn solution_basis_matrix(&self, cols: usize) -> DenseMatrix<T> {
        let cols = cols.min(self.sol_basis.len());
        DenseMatrix::from_columns(self.g.len(), &self.sol_basis[..cols]).expect("columns share a length")
    }

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

    /// The upper-triangular factor of `Aᵀ·D = L·W`, sized by the data basis.
    pub fn triangular(&self) -> DenseMatrix<T> {
        let c = self.tri.len();
        let mut w = DenseMatrix::zeros(c, c);
        for (j, col) in self.tri.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                w[(i, j)] = v;
            }
        }
        w
    }

    /// Extends both bases by one vector: `u = A·l_k` against `D`, then
    /// `q = Aᵀ·d_{k+1}` against `L`.
    pub fn step(&mut self, a: &CountedOperator<'_, T>) -> Result<StepProducts<T>> {
        if self.breakdown.is_some() {
            return Err(Error::InvalidArgument("step after breakdown".into()));
        }
        let k = self.steps() + 1;
        let (m, n) = (self.t.len(), self.g.len());

        let mut u = a.apply(&self.sol_basis[k - 1])?;
        let forward = u.clone();
        let scale = inf_norm(&u);
        let mut hcol = Vec::with_capacity(k + 1);
        for j in 0..k {
            let h = u[self.t[j]];
            hcol.push(h);
            axpy(-h, &self.data_basis[j], &mut u);
        }
        let pivot = if k < m {
            self.selector.elimination_pivot(&u, &self.t[k..], scale)
        } else {
            None
        };
        let Some(p) = pivot else {
            hcol.push(T::zero());
            self.hess.push(hcol);
            self.breakdown = Some(Breakdown::DataSpace);
            return Ok(StepProducts {
                forward,
                transpose: None,
            });
        };
        hcol.push(p.value);
        self.hess.push(hcol);
        self.t.swap(k, k + p.position);
        self.data_basis.push(scaled_copy(&u, p.value));

        let mut q = a.apply_transpose(&self.data_basis[k])?;
        let transpose = q.clone();
        let scale = inf_norm(&q);
        let mut wcol = Vec::with_capacity(k + 1);
        for j in 0..k {
            let w = q[self.g[j]];
            wcol.push(w);
            axpy(-w, &self.sol_basis[j], &mut q);
        }
        let pivot = if k < n {
            self.selector.elimination_pivot(&q, &self.g[k..], scale)
        } else {
            None
        };
        match pivot {
            Some(p) => {
                wcol.push(p.value);
                self.g.swap(k, k + p.position);
                self.sol_basis.push(scaled_copy(&q, p.value));
            }
            None => {
                wcol.push(T::zero());
                self.breakdown = Some(Breakdown::SolutionSpace);
            }
        }
        self.tri.push(wcol);
        Ok(StepProducts {
            forward,
            transpose: Some(transpose),
        })
    }

    /// `‖A·L_k − D_{k+1}·H_{k+1,k}‖_F` with uncounted products.
    pub fn forward_relation_residual(&self, a: &dyn LinearOperator<T>) -> Result<T> {
        let k = self.steps();
        if k == 0 {
            return Ok(T::zero());
        }
        let lk = self.solution_basis_matrix(k);
        let cols = (0..k).map(|j| a.apply(lk.col(j))).collect::<Result<Vec<_>>>()?;
        let al = DenseMatrix::from_columns(a.rows(), &cols)?;
        let h = self.hessenberg();
        let d = self.data_basis_matrix(k + 1);
        let rhs = d.matmul(&h.leading_rows(d.cols()))?;
        Ok(al.sub(&rhs)?.frobenius_norm())
    }

    /// `‖Aᵀ·D_{k+1} − L_{k+1}·W_{k+1}‖_F` with uncounted products.
    pub fn transpose_relation_residual(&self, a: &dyn LinearOperator<T>) -> Result<T> {
        let c = self.tri.len();
        let d = self.data_basis_matrix(c);
        let cols = (0..c).map(|j| a.apply_transpose(d.col(j))).collect::<Result<Vec<_>>>()?;
        let atd = DenseMatrix::from_columns(a.cols(), &cols)?;
        let w = self.triangular();
        let l = self.solution_basis_matrix(c);
        let rhs = l.matmul(&w.leading_rows(l.cols()))?;
        Ok(atd.sub(&rhs)?.frobenius_norm())
    }
}
