#![allow(dead_code)]

use hessketch::linops::kernels::PivotedQr;
use hessketch::linops::vector::{diagnostic_dot, diagnostic_norm};
use hessketch::rng::{gaussian_vec, rng_from_seed};
use hessketch::{LinearOperator, Matrix};

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    gaussian_vec(&mut rng_from_seed(seed), n)
}

pub fn random_matrix(m: usize, n: usize, seed: u64) -> Matrix {
    Matrix::from_col_major(m, n, random_vec(m * n, seed)).unwrap()
}

/// `2I + G/√n`: eigenvalues cluster in a unit disc around 2.
pub fn well_conditioned_square(n: usize, seed: u64) -> Matrix {
    let g = random_matrix(n, n, seed);
    let mut a = g.scaled(1.0 / (n as f64).sqrt());
    for i in 0..n {
        a[(i, i)] += 2.0;
    }
    a
}

pub fn norm(v: &[f64]) -> f64 {
    diagnostic_norm(v)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    diagnostic_dot(a, b)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn residual(a: &dyn LinearOperator<f64>, x: &[f64], b: &[f64]) -> f64 {
    norm(&sub(&a.apply(x).unwrap(), b))
}

/// Columns `v, Mv, M²v, …` for `M` given as a closure.
pub fn krylov_matrix(v: &[f64], k: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> Matrix {
    let mut cols = vec![v.to_vec()];
    while cols.len() < k {
        let next = apply(cols.last().unwrap());
        cols.push(next);
    }
    Matrix::from_columns(v.len(), &cols).unwrap()
}

/// Unit lower triangular factor of LU with partial pivoting (columns scaled
/// so each pivot entry is one) and the pivot row of each column.
pub fn lu_basis(k: &Matrix) -> (Matrix, Vec<usize>) {
    let (m, p) = (k.rows(), k.cols());
    let mut work = k.clone();
    let mut l = Matrix::zeros(m, p);
    let mut pivots = Vec::new();
    for j in 0..p {
        let col: Vec<f64> = work.col(j).to_vec();
        let (piv, _) = col
            .iter()
            .enumerate()
            .filter(|(i, _)| !pivots.contains(i))
            .fold((usize::MAX, -1.0), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        let scale = col[piv];
        for i in 0..m {
            l[(i, j)] = col[i] / scale;
        }
        pivots.push(piv);
        for jj in j + 1..p {
            let c = work[(piv, jj)] / scale;
            for i in 0..m {
                let v = col[i];
                work[(i, jj)] -= c * v;
            }
        }
    }
    (l, pivots)
}

/// Largest distance from a column of `x` to `range(basis)`, relative to the
/// column norm.
pub fn max_distance_to_range(basis: &Matrix, x: &Matrix) -> f64 {
    let q = PivotedQr::new(basis).thin_q();
    let mut worst: f64 = 0.0;
    for j in 0..x.cols() {
        let c = x.col(j);
        let coef = q.tr_mul_vec(c);
        let proj = q.mul_vec(&coef);
        worst = worst.max(norm(&sub(c, &proj)) / norm(c));
    }
    worst
}

/// Minimal residual of `b` over `range(images)` by orthogonal projection.
pub fn min_residual(images: &Matrix, b: &[f64]) -> f64 {
    let y = hessketch::dense_qr_ls(images, b).unwrap();
    norm(&sub(&images.mul_vec(&y), b))
}
