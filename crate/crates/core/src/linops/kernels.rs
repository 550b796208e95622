//! Dense kernels for the small projected problems: Householder QR with
//! column pivoting, the stacked Tikhonov solve and singular values by
//! one-sided Jacobi.

use crate::error::{check_len, Error, Result};
use crate::linops::DenseMatrix;
use crate::scalar::Scalar;

/// Householder QR factorization `M·P = Q·R` with column pivoting.
#[derive(Clone, Debug)]
pub struct PivotedQr<T> {
    rows: usize,
    cols: usize,
    /// Upper triangle holds `R`; the rest is scratch.
    r: DenseMatrix<T>,
    reflectors: Vec<(Vec<T>, T)>,
    perm: Vec<usize>,
}

fn norm2<T: Scalar>(x: &[T]) -> T {
    let amax = x.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    if amax == T::zero() || !amax.is_finite() {
        return amax;
    }
    amax * x.iter().map(|&v| (v / amax) * (v / amax)).sum::<T>().sqrt()
}

impl<T: Scalar> PivotedQr<T> {
    pub fn new(m: &DenseMatrix<T>) -> Self {
        Self::factor(m, true)
    }

    /// Factorization without pivoting; `R` then matches the column order of `M`.
    pub fn unpivoted(m: &DenseMatrix<T>) -> Self {
        Self::factor(m, false)
    }

    fn factor(m: &DenseMatrix<T>, pivoting: bool) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..cols).collect();
        let steps = rows.min(cols);
        let mut reflectors = Vec::with_capacity(steps);
        for j in 0..steps {
            if pivoting {
                let mut best = j;
                let mut best_norm = -T::one();
                for c in j..cols {
                    let nrm = norm2(&a.col(c)[j..]);
                    if nrm > best_norm {
                        best_norm = nrm;
                        best = c;
                    }
                }
                if best != j {
                    for i in 0..rows {
                        let tmp = a[(i, j)];
                        a[(i, j)] = a[(i, best)];
                        a[(i, best)] = tmp;
                    }
                    perm.swap(j, best);
                }
            }
            let x = &a.col(j)[j..];
            let xnorm = norm2(x);
            if xnorm == T::zero() {
                reflectors.push((vec![T::zero(); rows - j], T::zero()));
                continue;
            }
            let alpha = if x[0] >= T::zero() { -xnorm } else { xnorm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm2: T = v.iter().map(|&t| t * t).sum();
            let tau = if vnorm2 == T::zero() {
                T::zero()
            } else {
                T::lit(2.0) / vnorm2
            };
            for c in (j + 1)..cols {
                let col = &mut a.col_mut(c)[j..];
                let s = tau * v.iter().zip(col.iter()).map(|(&p, &q)| p * q).sum::<T>();
                for (ci, &vi) in col.iter_mut().zip(&v) {
                    *ci -= s * vi;
                }
            }
            let col = &mut a.col_mut(j)[j..];
            col[0] = alpha;
            col[1..].iter_mut().for_each(|t| *t = T::zero());
            reflectors.push((v, tau));
        }
        Self {
            rows,
            cols,
            r: a,
            reflectors,
            perm,
        }
    }

    /// Column permutation: column `j` of `M·P` is column `perm[j]` of `M`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Diagonal of `R`.
    pub fn r_diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|j| self.r[(j, j)]).collect()
    }

    /// The `min(ℓ,k) × k` upper-triangular factor.
    pub fn r(&self) -> DenseMatrix<T> {
        let p = self.rows.min(self.cols);
        let mut out = DenseMatrix::zeros(p, self.cols);
        for j in 0..self.cols {
            for i in 0..(j + 1).min(p) {
                out[(i, j)] = self.r[(i, j)];
            }
        }
        out
    }

    /// Number of diagonal entries of `R` above `rank_tol · |R₁₁|`.
    pub fn numerical_rank(&self) -> usize {
        let diag = self.r_diagonal();
        let Some(&first) = diag.first() else {
            return 0;
        };
        let cutoff = T::rank_tol() * first.abs();
        if first == T::zero() {
            return 0;
        }
        diag.iter().take_while(|d| d.abs() > cutoff).count()
    }

    /// Applies `Qᵀ` in place to a vector of length `rows`.
    pub fn apply_qt(&self, rhs: &mut [T]) {
        for (j, (v, tau)) in self.reflectors.iter().enumerate() {
            if *tau == T::zero() {
                continue;
            }
            let seg = &mut rhs[j..];
            let s = *tau * v.iter().zip(seg.iter()).map(|(&p, &q)| p * q).sum::<T>();
            for (si, &vi) in seg.iter_mut().zip(v) {
                *si -= s * vi;
            }
        }
    }

    /// Explicit thin `Q` (`rows × min(rows, cols)`).
    pub fn thin_q(&self) -> DenseMatrix<T> {
        let p = self.rows.min(self.cols);
        let mut q = DenseMatrix::zeros(self.rows, p);
        for c in 0..p {
            let col = q.col_mut(c);
            col[c] = T::one();
            for (j, (v, tau)) in self.reflectors.iter().enumerate().rev() {
                if *tau == T::zero() {
                    continue;
                }
                let seg = &mut col[j..];
                let s = *tau * v.iter().zip(seg.iter()).map(|(&a, &b)| a * b).sum::<T>();
                for (si, &vi) in seg.iter_mut().zip(v) {
                    *si -= s * vi;
                }
            }
        }
        q
    }

    /// Basic least-squares solution using the leading `rank` pivoted columns.
    pub fn solve_truncated(&self, rhs: &[T], rank: usize) -> Result<Vec<T>> {
        check_len("PivotedQr::solve rhs", self.rows, rhs.len())?;
        let rank = rank.min(self.rows.min(self.cols));
        let mut c = rhs.to_vec();
        self.apply_qt(&mut c);
        let mut z = vec![T::zero(); rank];
        for i in (0..rank).rev() {
            let mut s = c[i];
            for j in (i + 1)..rank {
                s -= self.r[(i, j)] * z[j];
            }
            z[i] = s / self.r[(i, i)];
        }
        let mut y = vec![T::zero(); self.cols];
        for (j, zj) in z.into_iter().enumerate() {
            y[self.perm[j]] = zj;
        }
        Ok(y)
    }

    /// Full-rank least-squares solution; fails on numerical rank deficiency.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let rank = self.numerical_rank();
        if rank < self.cols {
            return Err(Error::RankDeficient {
                rank,
                cols: self.cols,
            });
        }
        self.solve_truncated(rhs, rank)
    }
}

/// `argmin_y ‖M·y − rhs‖₂` by pivoted QR.
///
/// Fails with [`Error::RankDeficient`] when the smallest pivoted diagonal
/// entry of `R` drops below `1e-14` times the largest.
pub fn dense_qr_ls<T: Scalar>(m: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    m.require_nonempty()?;
    check_len("dense_qr_ls rhs", m.rows(), rhs.len())?;
    PivotedQr::new(m).solve(rhs)
}

/// Like [`dense_qr_ls`] but falls back to the basic solution on the numerical
/// rank when `M` is rank deficient. Returns the solution and the rank used.
pub fn truncated_qr_ls<T: Scalar>(m: &DenseMatrix<T>, rhs: &[T]) -> Result<(Vec<T>, usize)> {
    m.require_nonempty()?;
    check_len("truncated_qr_ls rhs", m.rows(), rhs.len())?;
    let qr = PivotedQr::new(m);
    let rank = qr.numerical_rank();
    Ok((qr.solve_truncated(rhs, rank)?, rank))
}

fn stack_tikhonov<T: Scalar>(
    m: &DenseMatrix<T>,
    n: &DenseMatrix<T>,
    rhs: &[T],
    lambda: T,
) -> Result<(DenseMatrix<T>, Vec<T>)> {
    check_len("stacked_tikhonov_ls rhs", m.rows(), rhs.len())?;
    check_len("stacked_tikhonov_ls penalty columns", m.cols(), n.cols())?;
    let stacked = m.vstack(&n.scaled(lambda))?;
    let mut stacked_rhs = rhs.to_vec();
    stacked_rhs.resize(m.rows() + n.rows(), T::zero());
    Ok((stacked, stacked_rhs))
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if lambda >= T::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "regularization parameter must be finite and nonnegative, got {lambda}"
        )))
    }
}

/// `argmin_y ‖M·y − rhs‖² + λ²‖N·y‖²` via QR of the stacked system `[M; λN]`.
///
/// With `λ = 0` this is exactly [`dense_qr_ls`] on `M`.
pub fn stacked_tikhonov_ls<T: Scalar>(
    m: &DenseMatrix<T>,
    n: &DenseMatrix<T>,
    rhs: &[T],
    lambda: T,
) -> Result<Vec<T>> {
    check_lambda(lambda)?;
    if lambda == T::zero() {
        return dense_qr_ls(m, rhs);
    }
    m.require_nonempty()?;
    let (stacked, stacked_rhs) = stack_tikhonov(m, n, rhs, lambda)?;
    dense_qr_ls(&stacked, &stacked_rhs)
}

/// Rank-tolerant counterpart of [`stacked_tikhonov_ls`].
pub fn truncated_tikhonov_ls<T: Scalar>(
    m: &DenseMatrix<T>,
    n: &DenseMatrix<T>,
    rhs: &[T],
    lambda: T,
) -> Result<(Vec<T>, usize)> {
    check_lambda(lambda)?;
    if lambda == T::zero() {
        return truncated_qr_ls(m, rhs);
    }
    m.require_nonempty()?;
    let (stacked, stacked_rhs) = stack_tikhonov(m, n, rhs, lambda)?;
    truncated_qr_ls(&stacked, &stacked_rhs)
}

/// Singular values in nonincreasing order.
///
/// Tall inputs are first reduced to their triangular QR factor; the square
/// factor is then diagonalized by one-sided Jacobi rotations.
pub fn singular_values<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<T>> {
    m.require_nonempty()?;
    let work = if m.rows() < m.cols() {
        m.transpose()
    } else {
        m.clone()
    };
    let mut u = if work.rows() > work.cols() {
        PivotedQr::new(&work).r()
    } else {
        work
    };
    let n = u.cols();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for (&a, &b) in u.col(p).iter().zip(u.col(q)) {
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..u.rows() {
                    let (a, b) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * a - s * b;
                    u[(i, q)] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..n).map(|j| norm2(u.col(j))).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sv)
}

/// `σ_max / σ_min`, or `+∞` when `σ_min` underflows the tiny threshold.
pub fn spectral_condition_number<T: Scalar>(m: &DenseMatrix<T>) -> Result<T> {
    let sv = singular_values(m)?;
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if min < T::tiny() {
        return Ok(T::infinity());
    }
    Ok(max / min)
}

/// Condition number of a block-diagonal matrix from its blocks' singular values.
pub fn block_diagonal_condition_number<T: Scalar>(blocks: &[&DenseMatrix<T>]) -> Result<T> {
    let mut max = T::zero();
    let mut min = T::infinity();
    for b in blocks {
        let sv = singular_values(b)?;
        max = max.max(sv[0]);
        // a wide block contributes zero singular values to the full matrix
        let smallest = if b.rows() < b.cols() {
            T::zero()
        } else {
            sv[sv.len() - 1]
        };
        min = min.min(smallest);
    }
    if blocks.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if min < T::tiny() {
        return Ok(T::infinity());
    }
    Ok(max / min)
}
