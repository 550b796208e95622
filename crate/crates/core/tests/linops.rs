mod common;

use common::{dot, norm, random_matrix, random_vec, sub};
use hessketch::linops::kernels::{singular_values, truncated_qr_ls};
use hessketch::linops::vector::diagnostic_norm;
use hessketch::problems::{Convolution2d, ParallelBeam, Psf};
use hessketch::{
    dense_qr_ls, spectral_condition_number, stacked_tikhonov_ls, CountedOperator, Error, IdentityOperator,
    LinearOperator, Matrix, OpCounters, SparseMatrix,
};
use proptest::prelude::*;

fn op_2x2() -> Matrix {
    Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
}

#[test]
fn counted_forward_products() {
    let counters = OpCounters::new();
    let id = IdentityOperator { n: 3 };
    let a = CountedOperator::new(&id, &counters);
    assert_eq!(a.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);

    let zero = Matrix::zeros(2, 3);
    let z = CountedOperator::new(&zero, &counters);
    assert_eq!(z.apply(&[5.0, -1.0, 2.0]).unwrap(), vec![0.0, 0.0]);

    let m = op_2x2();
    let a = CountedOperator::new(&m, &counters);
    assert_eq!(a.apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    let snap = counters.snapshot();
    assert_eq!(snap.matvec_count, 3);
    assert_eq!(snap.transpose_matvec_count, 0);
    assert_eq!(snap.dot_product_count, 0);
}

#[test]
fn counted_transpose_products() {
    let counters = OpCounters::new();
    let id = IdentityOperator { n: 2 };
    assert_eq!(
        CountedOperator::new(&id, &counters).apply_transpose(&[4.0, 5.0]).unwrap(),
        vec![4.0, 5.0]
    );
    let m = op_2x2();
    assert_eq!(
        CountedOperator::new(&m, &counters).apply_transpose(&[1.0, 0.0]).unwrap(),
        vec![1.0, 2.0]
    );
    let tall = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
    assert_eq!(
        CountedOperator::new(&tall, &counters).apply_transpose(&[1.0, 3.0]).unwrap(),
        vec![4.0]
    );
    assert_eq!(counters.snapshot().transpose_matvec_count, 3);
    assert_eq!(counters.snapshot().matvec_count, 0);
}

#[test]
fn dimension_mismatch_is_an_error_and_not_counted() {
    let counters = OpCounters::new();
    let m = op_2x2();
    let a = CountedOperator::new(&m, &counters);
    assert!(matches!(a.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(a.apply_transpose(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
    assert_eq!(counters.snapshot().matvec_count, 0);
    assert_eq!(counters.snapshot().transpose_matvec_count, 0);
}

#[test]
fn counters_are_monotone() {
    let counters = OpCounters::new();
    let m = random_matrix(5, 4, 1);
    let a = CountedOperator::new(&m, &counters);
    let mut last = counters.snapshot();
    for i in 0..10 {
        if i % 2 == 0 {
            a.apply(&random_vec(4, i)).unwrap();
        } else {
            a.apply_transpose(&random_vec(5, i)).unwrap();
        }
        let now = counters.snapshot();
        assert!(now.matvec_count >= last.matvec_count);
        assert!(now.transpose_matvec_count >= last.transpose_matvec_count);
        last = now;
    }
    assert_eq!((last.matvec_count, last.transpose_matvec_count), (5, 5));
}

fn shipped_operators() -> Vec<(&'static str, Box<dyn LinearOperator<f64>>)> {
    let dense = random_matrix(7, 5, 3);
    let triplets: Vec<(usize, usize, f64)> = (0..12).map(|i| ((i * 5) % 9, (i * 7) % 6, i as f64 - 4.5)).collect();
    vec![
        ("identity", Box::new(IdentityOperator { n: 6 })),
        ("dense", Box::new(dense)),
        ("csr", Box::new(SparseMatrix::from_triplets(9, 6, triplets).unwrap())),
        (
            "gaussian blur",
            Box::new(Convolution2d::<f64>::new(10, 12, Psf::Gaussian { sigma: 1.0 }.kernel().unwrap()).unwrap()),
        ),
        (
            "motion blur",
            Box::new(
                Convolution2d::<f64>::new(11, 11, Psf::Motion { length: 5.0, angle: 60.0 }.kernel().unwrap())
                    .unwrap(),
            ),
        ),
        ("tomography", Box::new(ParallelBeam::new(10, 7).unwrap().system_matrix::<f64>().unwrap())),
    ]
}

#[test]
fn every_operator_is_linear_and_adjoint_consistent() {
    for (name, op) in shipped_operators() {
        let (m, n) = (op.rows(), op.cols());
        for pair in 0..20u64 {
            let (x, y) = (random_vec(n, 100 + pair), random_vec(n, 200 + pair));
            let (alpha, beta) = (1.5 - pair as f64 * 0.1, -0.25 + pair as f64 * 0.05);
            let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = op.apply(&combo).unwrap();
            let (ax, ay) = (op.apply(&x).unwrap(), op.apply(&y).unwrap());
            let rhs: Vec<f64> = ax.iter().zip(&ay).map(|(a, b)| alpha * a + beta * b).collect();
            assert!(norm(&sub(&lhs, &rhs)) <= 1e-12 * (1.0 + norm(&rhs)), "{name} linearity");

            let u = random_vec(m, 300 + pair);
            let lt = op.apply_transpose(&u).unwrap();
            let (l, r) = (dot(&ax, &u), dot(&x, &lt));
            assert!((l - r).abs() <= 1e-10 * norm(&ax) * norm(&u).max(1e-300), "{name} adjoint");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_adjoint_consistency(m in 1usize..12, n in 1usize..12, seed in 0u64..1000) {
        let a = random_matrix(m, n, seed);
        let (v, u) = (random_vec(n, seed + 1), random_vec(m, seed + 2));
        let l = dot(&a.apply(&v).unwrap(), &u);
        let r = dot(&v, &a.apply_transpose(&u).unwrap());
        prop_assert!((l - r).abs() <= 1e-10 * (1.0 + l.abs()));
    }

    #[test]
    fn csr_matches_its_dense_form(m in 1usize..10, n in 1usize..10, seed in 0u64..1000) {
        let vals = random_vec(m * n, seed);
        let triplets: Vec<_> = (0..m * n)
            .filter(|i| vals[*i] > 0.3)
            .map(|i| (i % m, i / m, vals[i]))
            .collect();
        let s = SparseMatrix::from_triplets(m, n, triplets).unwrap();
        let d = s.to_dense();
        let x = random_vec(n, seed + 7);
        let y = random_vec(m, seed + 8);
        prop_assert!(norm(&sub(&s.apply(&x).unwrap(), &d.apply(&x).unwrap())) < 1e-13);
        prop_assert!(norm(&sub(&s.apply_transpose(&y).unwrap(), &d.apply_transpose(&y).unwrap())) < 1e-13);
    }
}

#[test]
fn qr_ls_examples() {
    let tall = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
    assert!((dense_qr_ls(&tall, &[1.0, 3.0]).unwrap()[0] - 2.0).abs() < 1e-14);
    assert_eq!(dense_qr_ls(&Matrix::identity(2), &[0.3, -7.0]).unwrap(), vec![0.3, -7.0]);
    let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let y = dense_qr_ls(&m, &[1.0, 1.0, 2.0]).unwrap();
    assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 1.0).abs() < 1e-14);
}

#[test]
fn qr_ls_reports_rank() {
    let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]).unwrap();
    match dense_qr_ls(&m, &[1.0, 2.0, 3.0, 4.0]) {
        Err(Error::RankDeficient { rank, cols }) => assert_eq!((rank, cols), (2, 3)),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
    let (_, rank) = truncated_qr_ls(&m, &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(rank, 2);
}

#[test]
fn qr_ls_matches_normal_equations() {
    for seed in 0..10 {
        let m = random_matrix(30, 5, seed);
        let rhs = random_vec(30, seed + 50);
        let y = dense_qr_ls(&m, &rhs).unwrap();
        // Normal equations solved by Gaussian elimination on the 5×5 Gram matrix.
        let mut g = m.transpose().matmul(&m).unwrap();
        let mut c = m.tr_mul_vec(&rhs);
        for p in 0..5 {
            for r in p + 1..5 {
                let f = g[(r, p)] / g[(p, p)];
                for col in p..5 {
                    let v = g[(p, col)];
                    g[(r, col)] -= f * v;
                }
                c[r] -= f * c[p];
            }
        }
        let mut z = vec![0.0; 5];
        for p in (0..5).rev() {
            let s: f64 = (p + 1..5).map(|j| g[(p, j)] * z[j]).sum();
            z[p] = (c[p] - s) / g[(p, p)];
        }
        assert!(norm(&sub(&y, &z)) <= 1e-8 * norm(&z));
        // Normal-equation residual bound.
        let r = sub(&m.mul_vec(&y), &rhs);
        assert!(norm(&m.tr_mul_vec(&r)) <= 1e-10 * m.frobenius_norm() * norm(&rhs));
    }
}

#[test]
fn tikhonov_examples() {
    let one = Matrix::identity(1);
    assert!((stacked_tikhonov_ls(&one, &one, &[1.0], 1.0).unwrap()[0] - 0.5).abs() < 1e-15);

    for seed in 0..5 {
        let m = random_matrix(12, 4, seed);
        let n = random_matrix(6, 4, seed + 9);
        let rhs = random_vec(12, seed + 20);
        assert_eq!(stacked_tikhonov_ls(&m, &n, &rhs, 0.0).unwrap(), dense_qr_ls(&m, &rhs).unwrap());
        let y = stacked_tikhonov_ls(&m, &n, &rhs, 1e8).unwrap();
        let n_norm = singular_values(&n).unwrap()[0];
        assert!(diagnostic_norm(&y) <= 1e-6 * norm(&rhs) / n_norm);
    }
    assert!(stacked_tikhonov_ls(&one, &one, &[1.0], -1.0).is_err());
}

#[test]
fn condition_number_examples() {
    assert_eq!(spectral_condition_number(&Matrix::identity(3)).unwrap(), 1.0);
    assert!((spectral_condition_number(&Matrix::from_diagonal(&[2.0, 1.0])).unwrap() - 2.0).abs() < 1e-14);
    let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1e-8]]).unwrap();
    let ours = spectral_condition_number(&m).unwrap();
    let svd = nalgebra::DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1e-8]).singular_values();
    let oracle: f64 = svd.max() / svd.min();
    assert!((ours - oracle).abs() <= 1e-6 * oracle);
    assert!(matches!(spectral_condition_number(&Matrix::zeros(0, 0)), Err(Error::EmptyMatrix)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn singular_values_match_nalgebra(m in 1usize..9, n in 1usize..9, seed in 0u64..1000) {
        let a = random_matrix(m, n, seed);
        let ours = singular_values(&a).unwrap();
        let na = nalgebra::DMatrix::from_column_slice(m, n, a.as_slice());
        let mut theirs: Vec<f64> = na.singular_values().iter().cloned().collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        prop_assert_eq!(ours.len(), theirs.len());
        for (s, t) in ours.iter().zip(&theirs) {
            prop_assert!((s - t).abs() <= 1e-10 * theirs[0]);
        }
    }
}
