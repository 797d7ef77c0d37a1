mod common;

use common::*;
use matsketch::linalg::{self, RankKProjection};
use matsketch::{cov_err, proj_err, ErrorEvaluator, RowMatrix, SketchError};
use nalgebra::SymmetricEigen;
use ndarray::{array, s, Array2};
use proptest::prelude::*;

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn singular_values_match_nalgebra(n in 1usize..40, d in 1usize..12, seed in any::<u64>()) {
        let a = gaussian(n, d, seed);
        let ours = linalg::svd(a.dense().view()).unwrap();
        let theirs = to_na(&a).singular_values();
        let mut theirs: Vec<f64> = theirs.iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        let top = theirs[0];
        for (x, y) in ours.values.iter().zip(&theirs) {
            // Values under the clamp are reported as zero.
            if *y > 1e-11 * top {
                prop_assert!((x - y).abs() <= 1e-9 * top, "{x} vs {y}");
            }
        }
        prop_assert!(rel_close(ours.sum_sq(), a.frobenius_sq(), 1e-8));
        prop_assert!(linalg::orthonormality_error(ours.right_basis.view()) < 1e-8);
    }

    #[test]
    fn svd_reconstructs_input(n in 1usize..30, d in 1usize..10, seed in any::<u64>()) {
        let a = gaussian(n, d, seed);
        let full = linalg::svd_full(a.dense().view()).unwrap();
        let rebuilt = full.left.dot(&full.spectrum.to_matrix());
        let diff = (&rebuilt - &*a.dense()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn spectral_norm_of_gram_is_top_value_squared(n in 2usize..60, d in 1usize..90, seed in any::<u64>()) {
        let a = gaussian(n, d, seed);
        let sigma = to_na(&a).singular_values().max();
        let got = linalg::spectral_norm(a.gram().view()).unwrap();
        prop_assert!(rel_close(got, sigma * sigma, 1e-8), "{got} vs {}", sigma * sigma);
    }

    #[test]
    fn symmetric_eigen_matches_nalgebra(d in 1usize..20, seed in any::<u64>()) {
        let a = gaussian(d + 3, d, seed);
        let g = a.gram();
        let ours = linalg::sym_eigen(g.view()).unwrap();
        let mut theirs: Vec<f64> = SymmetricEigen::new(to_na(&a).transpose() * to_na(&a))
            .eigenvalues.iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.values.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-9 * theirs[0]);
        }
    }

    #[test]
    fn projection_is_idempotent_and_contracting(n in 1usize..20, d in 2usize..10, k in 1usize..10, seed in any::<u64>()) {
        let k = k.min(d);
        let a = gaussian(n, d, seed);
        let basis = linalg::svd(gaussian(d + 2, d, seed ^ 9).dense().view()).unwrap().right_basis;
        let p = RankKProjection::new(basis.slice(s![..k, ..]).to_owned()).unwrap();
        let once = linalg::project_onto(&a, &p).unwrap();
        let twice = linalg::project_onto(&once, &p).unwrap();
        let diff = (&*twice.dense() - &*once.dense()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(diff < 1e-10);
        prop_assert!(once.frobenius_sq() <= a.frobenius_sq() * (1.0 + 1e-12));
    }

    #[test]
    fn metrics_are_in_range(n in 12usize..40, d in 11usize..16, ell in 1usize..12, seed in any::<u64>()) {
        let a = gaussian(n, d, seed);
        let b = RowMatrix::from_dense(a.dense().slice(s![..ell, ..]).to_owned());
        prop_assert!(cov_err(&a, &b).unwrap() >= 0.0);
        prop_assert!(proj_err(&a, &b, 10).unwrap().value >= 1.0 - 1e-9);
    }
}

#[test]
fn projection_examples() {
    let a = RowMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
    let e1 = RankKProjection::new(array![[1.0, 0.0]]).unwrap();
    assert_eq!(linalg::project_onto(&a, &e1).unwrap().into_dense(), array![[1.0, 0.0]]);
    let full = RankKProjection::new(Array2::eye(2)).unwrap();
    assert_eq!(linalg::project_onto(&a, &full).unwrap(), a);
    let b = RowMatrix::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
    let e3 = RankKProjection::new(array![[0.0, 0.0, 1.0]]).unwrap();
    assert_eq!(linalg::project_onto(&b, &e3).unwrap().frobenius_sq(), 0.0);
    assert!(RankKProjection::new(array![[1.0, 1.0]]).is_err());
}

#[test]
fn cov_err_examples() {
    let a = gaussian(6, 3, 17);
    assert_eq!(cov_err(&a, &a).unwrap(), 0.0);
    let i2 = RowMatrix::from_dense(Array2::eye(2));
    assert_eq!(cov_err(&i2, &RowMatrix::zeros(1, 2)).unwrap(), 0.5);
    let b = RowMatrix::from_dense(a.dense().slice(s![..3, ..]).to_owned());
    assert!((cov_err(&a, &b).unwrap() - cov_err_oracle(&a, &b)).abs() < 1e-8);
    assert!(matches!(cov_err(&RowMatrix::zeros(2, 2), &i2), Err(SketchError::Undefined(_))));
    assert!(matches!(cov_err(&i2, &RowMatrix::zeros(1, 3)), Err(SketchError::DimensionMismatch { .. })));
}

#[test]
fn proj_err_examples() {
    let a = gaussian(30, 12, 3);
    assert!((proj_err(&a, &a, 10).unwrap().value - 1.0).abs() < 1e-9);
    let low = RowMatrix::from_dense(gaussian(20, 2, 4).dense().dot(&gaussian(2, 8, 5).into_dense()));
    assert!(matches!(proj_err(&low, &low, 3), Err(SketchError::ExactLowRank { k: 3 })));
    // A sketch with rank below k uses its whole row space.
    let b = RowMatrix::from_dense(a.dense().slice(s![..2, ..]).to_owned());
    let p = proj_err(&a, &b, 5).unwrap();
    assert!(p.rank_deficient);
    assert!((p.value - proj_err_oracle(&a, &b, 5)).abs() < 1e-8);
}

#[test]
fn evaluator_large_dimension_uses_power_iteration() {
    // d > 64 goes through power iteration.
    let a = decaying(150, 80, 6);
    let b = RowMatrix::from_dense(a.dense().slice(s![..40, ..]).to_owned());
    let ev = ErrorEvaluator::new(&a).unwrap();
    let got = ev.cov_err(&b).unwrap();
    let want = cov_err_oracle(&a, &b);
    assert!(rel_close(got, want, 1e-8), "{got} vs {want}");
    assert!(rel_close(ev.tail_sq(10), tail_sq(&a, 10), 1e-8));
}
