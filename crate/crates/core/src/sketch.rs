//! Gaussian sketching operators and sketch-and-solve least squares.

use crate::error::{check_len, Error, Result};
use crate::linops::kernels::{dense_qr_ls, spectral_condition_number, PivotedQr};
use crate::linops::{DenseMatrix, OpCounters};
use crate::rng::{gaussian_vec, rng_from_seed};
use crate::scalar::Scalar;

/// Explicitly stored `ℓ × m` embedding.
///
/// Entries of a Gaussian sketch are independent `N(0, 1/ℓ)` draws generated
/// row by row from `ChaCha8Rng::seed_from_u64(seed)`.
#[derive(Clone, Debug)]
pub struct SketchOperator<T> {
    out_rows: usize,
    in_rows: usize,
    seed: u64,
    /// Row-major entries.
    entries: Vec<T>,
}

/// Draws a seeded Gaussian `out_rows × in_rows` sketch.
pub fn make_gaussian_sketch<T: Scalar>(out_rows: usize, in_rows: usize, seed: u64) -> Result<SketchOperator<T>> {
    if out_rows == 0 || in_rows == 0 {
        return Err(Error::InvalidArgument(format!(
            "sketch dimensions must be positive, got {out_rows}x{in_rows}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let scale = T::one() / T::lit(out_rows as f64).sqrt();
    let mut entries: Vec<T> = gaussian_vec(&mut rng, out_rows * in_rows);
    entries.iter_mut().for_each(|v| *v *= scale);
    Ok(SketchOperator {
        out_rows,
        in_rows,
        seed,
        entries,
    })
}

impl<T: Scalar> SketchOperator<T> {
    /// Wraps an explicit matrix, e.g. an orthogonal or identity embedding in tests.
    pub fn from_matrix(matrix: &DenseMatrix<T>) -> Self {
        let t = matrix.transpose();
        Self {
            out_rows: matrix.rows(),
            in_rows: matrix.cols(),
            seed: 0,
            entries: t.as_slice().to_vec(),
        }
    }

    pub fn out_rows(&self) -> usize {
        self.out_rows
    }

    pub fn in_rows(&self) -> usize {
        self.in_rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.in_rows..(i + 1) * self.in_rows]
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.out_rows, self.in_rows);
        for i in 0..self.out_rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `S·v` without touching any counter.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        check_len("sketch_apply", self.in_rows, v.len())?;
        Ok((0..self.out_rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&s, &x)| s * x).sum())
            .collect())
    }

    /// `S·v`, incrementing the sketch application count of a solve.
    pub fn apply_counted(&self, v: &[T], counters: &OpCounters) -> Result<Vec<T>> {
        let out = self.apply(v)?;
        counters.bump_sketch();
        Ok(out)
    }

    /// `S·M` column by column.
    pub fn apply_matrix(&self, m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        check_len("sketch_apply rows", self.in_rows, m.rows())?;
        let cols = (0..m.cols())
            .map(|j| self.apply(m.col(j)))
            .collect::<Result<Vec<_>>>()?;
        DenseMatrix::from_columns(self.out_rows, &cols)
    }
}

/// `argmin_y ‖S(M·y − rhs)‖` solved as `dense_qr_ls(S·M, S·rhs)`.
pub fn sketch_and_solve_ls<T: Scalar>(s: &SketchOperator<T>, m: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    check_len("sketch_and_solve_ls rhs", m.rows(), rhs.len())?;
    let sm = s.apply_matrix(m)?;
    let srhs = s.apply(rhs)?;
    dense_qr_ls(&sm, &srhs)
}

/// Measured embedding distortion of `S` over `range(basis)`.
///
/// With `Q` an orthonormal basis of the columns, `κ = κ₂(S·Q)` and the
/// returned value is `ε = (κ − 1)/(κ + 1)`, so that `(1+ε)/(1−ε) = κ`.
/// An embedding that collapses the subspace yields `ε = 1`.
pub fn measured_epsilon<T: Scalar>(s: &SketchOperator<T>, basis: &DenseMatrix<T>) -> Result<T> {
    basis.require_nonempty()?;
    check_len("measured_epsilon rows", s.in_rows(), basis.rows())?;
    let qr = PivotedQr::new(basis);
    let rank = qr.numerical_rank();
    if rank < basis.cols() {
        return Err(Error::RankDeficient {
            rank,
            cols: basis.cols(),
        });
    }
    let sq = s.apply_matrix(&qr.thin_q())?;
    if sq.rows() < sq.cols() {
        return Ok(T::one());
    }
    let kappa = spectral_condition_number(&sq)?;
    Ok(epsilon_from_condition(kappa))
}

/// `ε = (κ − 1)/(κ + 1)`, with `ε = 1` for an infinite condition number.
pub fn epsilon_from_condition<T: Scalar>(kappa: T) -> T {
    if kappa.is_infinite() {
        T::one()
    } else {
        (kappa - T::one()) / (kappa + T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::vector::diagnostic_norm;

    #[test]
    fn deterministic_under_seed() {
        let a: SketchOperator<f64> = make_gaussian_sketch(3, 5, 7).unwrap();
        let b: SketchOperator<f64> = make_gaussian_sketch(3, 5, 7).unwrap();
        assert_eq!(a.entries, b.entries);
        let c: SketchOperator<f64> = make_gaussian_sketch(3, 5, 8).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn rejects_zero_dimensions() {
        assert!(make_gaussian_sketch::<f64>(0, 5, 1).is_err());
        assert!(make_gaussian_sketch::<f64>(5, 0, 1).is_err());
    }

    #[test]
    fn single_entry_is_standard_normal_draw() {
        let s: SketchOperator<f64> = make_gaussian_sketch(1, 1, 3).unwrap();
        let mut rng = rng_from_seed(3);
        let g: Vec<f64> = gaussian_vec(&mut rng, 1);
        assert_eq!(s.entries[0], g[0]);
    }

    #[test]
    fn zero_vector_maps_to_zero() {
        let s: SketchOperator<f64> = make_gaussian_sketch(4, 6, 1).unwrap();
        assert_eq!(s.apply(&[0.0; 6]).unwrap(), vec![0.0; 4]);
        assert!(s.apply(&[0.0; 5]).is_err());
    }

    #[test]
    fn one_row_sketch_matches_loop() {
        let s: SketchOperator<f64> = make_gaussian_sketch(1, 7, 11).unwrap();
        let v: Vec<f64> = (0..7).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut acc = 0.0;
        for j in 0..7 {
            acc += s.to_dense()[(0, j)] * v[j];
        }
        assert!((s.apply(&v).unwrap()[0] - acc).abs() < 1e-15);
    }

    #[test]
    fn counted_application_bumps_counter() {
        let s: SketchOperator<f64> = make_gaussian_sketch(2, 3, 1).unwrap();
        let c = OpCounters::new();
        s.apply_counted(&[1.0, 2.0, 3.0], &c).unwrap();
        s.apply_counted(&[1.0, 2.0, 3.0], &c).unwrap();
        assert_eq!(c.snapshot().sketch_apply_count, 2);
        assert_eq!(c.snapshot().dot_product_count, 0);
    }

    #[test]
    fn identity_and_scaled_identity_have_zero_distortion() {
        let basis = DenseMatrix::from_rows(&[
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 2.0],
            vec![3.0, -1.0],
        ])
        .unwrap();
        let id = SketchOperator::from_matrix(&DenseMatrix::<f64>::identity(4));
        assert!(measured_epsilon(&id, &basis).unwrap().abs() < 1e-14);
        let two = SketchOperator::from_matrix(&DenseMatrix::<f64>::identity(4).scaled(2.0));
        assert!(measured_epsilon(&two, &basis).unwrap().abs() < 1e-14);
    }

    #[test]
    fn invertible_square_sketch_on_consistent_system() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let ystar = [0.5, -2.0];
        let rhs = m.mul_vec(&ystar);
        let s: SketchOperator<f64> = make_gaussian_sketch(3, 3, 5).unwrap();
        let y = sketch_and_solve_ls(&s, &m, &rhs).unwrap();
        assert!(diagnostic_norm(&crate::linops::vector::sub(&y, &ystar)) < 1e-12);
    }
}
