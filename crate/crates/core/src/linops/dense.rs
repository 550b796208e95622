use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::scalar::Scalar;

/// Small dense matrix stored column-major.
///
/// Houses the projected quantities (Hessenberg and triangular factors,
/// sketched bases) and doubles as an explicit operator in tests.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from column-major entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        check_len("DenseMatrix::from_col_major", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            check_len("DenseMatrix::from_rows", ncols, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            check_len("DenseMatrix::from_columns", rows, c.len())?;
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Appends a column; an empty matrix adopts the column length as its row count.
    pub fn push_column(&mut self, column: &[T]) -> Result<()> {
        if self.cols == 0 && self.data.is_empty() {
            self.rows = column.len();
        }
        check_len("DenseMatrix::push_column", self.rows, column.len())?;
        self.data.extend_from_slice(column);
        self.cols += 1;
        Ok(())
    }

    /// Leading `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> Self {
        let cols = cols.min(self.cols);
        Self {
            rows: self.rows,
            cols,
            data: self.data[..self.rows * cols].to_vec(),
        }
    }

    /// Leading `rows` rows.
    pub fn leading_rows(&self, rows: usize) -> Self {
        let rows = rows.min(self.rows);
        let mut out = Self::zeros(rows, self.cols);
        for j in 0..self.cols {
            out.col_mut(j).copy_from_slice(&self.col(j)[..rows]);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * alpha).collect(),
        }
    }

    /// `self * x` without dimension checks beyond debug assertions.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != T::zero() {
                for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                    *yi += a * xj;
                }
            }
        }
        y
    }

    /// `selfᵀ * y`.
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|j| self.col(j).iter().zip(y).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_len("DenseMatrix::matmul", self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let c = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&c);
        }
        Ok(out)
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        check_len("DenseMatrix::vstack", self.cols, other.cols)?;
        let rows = self.rows + other.rows;
        let mut out = Self::zeros(rows, self.cols);
        for j in 0..self.cols {
            let c = out.col_mut(j);
            c[..self.rows].copy_from_slice(self.col(j));
            c[self.rows..].copy_from_slice(other.col(j));
        }
        Ok(out)
    }

    /// Block-diagonal matrix `[self 0; 0 other]`.
    pub fn block_diag(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        for j in 0..self.cols {
            out.col_mut(j)[..self.rows].copy_from_slice(self.col(j));
        }
        for j in 0..other.cols {
            out.col_mut(self.cols + j)[self.rows..].copy_from_slice(other.col(j));
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len("DenseMatrix::sub rows", self.rows, other.rows)?;
        check_len("DenseMatrix::sub cols", self.cols, other.cols)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Converts between scalar types.
    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| U::lit(v.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyMatrix)
        } else {
            Ok(())
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(&self.mul_vec(x));
    }

    fn apply_transpose_into(&self, y: &[T], x: &mut [T]) {
        x.copy_from_slice(&self.tr_mul_vec(y));
    }
}
