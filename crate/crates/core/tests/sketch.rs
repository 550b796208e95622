mod common;

use common::{norm, random_matrix, random_vec, sub};
use hessketch::linops::kernels::PivotedQr;
use hessketch::{dense_qr_ls, make_gaussian_sketch, measured_epsilon, sketch_and_solve_ls, Matrix, Sketch};

fn orthogonal(n: usize, seed: u64) -> Matrix {
    PivotedQr::unpivoted(&random_matrix(n, n, seed)).thin_q()
}

#[test]
fn entries_have_zero_mean_and_variance_one_over_rows() {
    let (l, m) = (50, 400);
    let s: Sketch = make_gaussian_sketch(l, m, 2024).unwrap();
    let entries: Vec<f64> = (0..l).flat_map(|i| s.row(i).to_vec()).collect();
    let count = entries.len() as f64;
    let mean = entries.iter().sum::<f64>() / count;
    let var = entries.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let se = (1.0 / l as f64 / count).sqrt();
    assert!(mean.abs() < 5.0 * se, "mean {mean}");
    assert!((var * l as f64 - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn column_norms_average_one() {
    let s: Sketch = make_gaussian_sketch(100, 200, 5).unwrap();
    let d = s.to_dense();
    let mean = (0..200).map(|j| norm(d.col(j))).sum::<f64>() / 200.0;
    assert!((mean - 1.0).abs() < 0.1, "mean column norm {mean}");
}

#[test]
fn same_seed_same_entries() {
    let a: Sketch = make_gaussian_sketch(3, 5, 7).unwrap();
    let b: Sketch = make_gaussian_sketch(3, 5, 7).unwrap();
    assert_eq!(a.to_dense(), b.to_dense());
    let c: Sketch = make_gaussian_sketch(3, 5, 8).unwrap();
    assert_ne!(a.to_dense(), c.to_dense());
}

#[test]
fn norm_is_preserved_in_expectation() {
    let v = random_vec(40, 1);
    let vv = norm(&v).powi(2);
    let mean = (0..2000u64)
        .map(|seed| {
            let s: Sketch = make_gaussian_sketch(8, 40, seed).unwrap();
            norm(&s.apply(&v).unwrap()).powi(2) / vv
        })
        .sum::<f64>()
        / 2000.0;
    assert!((mean - 1.0).abs() < 0.1, "mean ratio {mean}");
}

#[test]
fn orthogonal_sketch_reproduces_least_squares() {
    // Only orthogonal (up to scale) square sketches preserve the minimizer of
    // an inconsistent problem; a general invertible S reweights the residual.
    let m = random_matrix(12, 3, 1);
    let rhs = random_vec(12, 2);
    let exact = dense_qr_ls(&m, &rhs).unwrap();
    for scale in [1.0, 3.0] {
        let s = Sketch::from_matrix(&orthogonal(12, 3).scaled(scale));
        let y = sketch_and_solve_ls(&s, &m, &rhs).unwrap();
        assert!(norm(&sub(&y, &exact)) <= 1e-12 * norm(&exact));
    }
}

#[test]
fn consistent_system_is_solved_exactly() {
    let m = random_matrix(40, 4, 10);
    let y_star = vec![1.0, -2.0, 0.5, 3.0];
    let rhs = m.mul_vec(&y_star);
    for seed in 0..5 {
        let s: Sketch = make_gaussian_sketch(6, 40, seed).unwrap();
        let y = sketch_and_solve_ls(&s, &m, &rhs).unwrap();
        assert!(norm(&sub(&y, &y_star)) < 1e-10);
    }
}

#[test]
fn sketch_and_solve_propagates_rank_deficiency() {
    let mut m = random_matrix(20, 3, 11);
    let c0 = m.col(0).to_vec();
    m.col_mut(2).copy_from_slice(&c0);
    let s: Sketch = make_gaussian_sketch(10, 20, 1).unwrap();
    assert!(sketch_and_solve_ls(&s, &m, &random_vec(20, 2)).is_err());
}

#[test]
fn distortion_examples() {
    let basis = random_matrix(9, 3, 4);
    let id = Sketch::from_matrix(&Matrix::identity(9));
    assert!(measured_epsilon(&id, &basis).unwrap() < 1e-12);
    let twice = Sketch::from_matrix(&Matrix::identity(9).scaled(2.0));
    assert!(measured_epsilon(&twice, &basis).unwrap() < 1e-12);

    let mut rank_deficient = random_matrix(9, 3, 5);
    let c = rank_deficient.col(0).to_vec();
    rank_deficient.col_mut(1).copy_from_slice(&c);
    assert!(measured_epsilon(&id, &rank_deficient).is_err());
}

#[test]
fn distortion_at_default_sketch_size_is_moderate() {
    let k = 30;
    let basis = random_matrix(2000, k + 1, 6);
    let mut eps = Vec::new();
    for seed in 0..5 {
        let s: Sketch = make_gaussian_sketch(10 * (k + 1), 2000, seed).unwrap();
        eps.push(measured_epsilon(&s, &basis).unwrap());
    }
    eprintln!("measured epsilon at l = 10(k+1), k = {k}: {eps:?}");
    assert!(eps.iter().all(|e| *e > 0.0 && *e < 1.0));
}
