use crate::error::{check_len, Result};
use crate::linops::kernels::dense_qr_ls;
use crate::linops::vector::{diagnostic_norm, sub};
use crate::linops::{DenseMatrix, LinearOperator};
use crate::scalar::Scalar;

/// Minimal residual over `range(L_k)`: `argmin_y ‖A·L_k·y − b‖`.
///
/// Forms `A·L_k` with `k` uncounted products; meant for tests and diagnostics.
/// Returns the coefficients and the attained residual norm.
pub fn projected_minres_oracle<T: Scalar>(
    a: &dyn LinearOperator<T>,
    basis: &DenseMatrix<T>,
    b: &[T],
) -> Result<(Vec<T>, T)> {
    check_len("projected_minres_oracle basis rows", a.cols(), basis.rows())?;
    let cols = (0..basis.cols())
        .map(|j| a.apply(basis.col(j)))
        .collect::<Result<Vec<_>>>()?;
    let images = DenseMatrix::from_columns(a.rows(), &cols)?;
    projected_minres_from_images(&images, b)
}

/// Same as [`projected_minres_oracle`] given the images `A·L_k` directly.
pub fn projected_minres_from_images<T: Scalar>(images: &DenseMatrix<T>, b: &[T]) -> Result<(Vec<T>, T)> {
    let y = dense_qr_ls(images, b)?;
    let res = diagnostic_norm(&sub(&images.mul_vec(&y), b));
    Ok((y, res))
}
