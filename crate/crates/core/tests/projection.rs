mod common;

use common::*;
use matsketch::projection::{fjlt_apply, fjlt_sketch, fwht_rows, project, ProjectionKind, ProjectionState};
use matsketch::rng::rng_from_seed;
use matsketch::RowMatrix;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

const KINDS: [ProjectionKind; 4] = [
    ProjectionKind::Sign,
    ProjectionKind::Hash,
    ProjectionKind::Osnap { s: 1 },
    ProjectionKind::Osnap { s: 4 },
];

fn max_abs_diff(x: &RowMatrix, y: &RowMatrix) -> f64 {
    (&*x.dense() - &*y.dense()).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn projections_are_linear(
        n in 1usize..60,
        d in 1usize..8,
        ell in 1usize..20,
        c in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let a1 = gaussian(n, d, seed);
        let a2 = gaussian(n, d, seed ^ 1);
        let sum = RowMatrix::from_dense(&*a1.dense() + &*a2.dense());
        for kind in KINDS {
            let b1 = project(&a1, kind, ell, seed).unwrap();
            let b2 = project(&a2, kind, ell, seed).unwrap();
            let bs = project(&sum, kind, ell, seed).unwrap();
            let added = RowMatrix::from_dense(&*b1.dense() + &*b2.dense());
            prop_assert!(max_abs_diff(&bs, &added) < 1e-10);
            let scaled = project(&a1.scaled(c), kind, ell, seed).unwrap();
            prop_assert!(max_abs_diff(&scaled, &b1.scaled(c)) < 1e-10);
        }
    }

    #[test]
    fn stacked_stream_equals_update_sequence(
        n1 in 1usize..30,
        n2 in 1usize..30,
        d in 1usize..6,
        ell in 1usize..12,
        seed in any::<u64>(),
    ) {
        let a1 = gaussian(n1, d, seed);
        let a2 = gaussian(n2, d, seed ^ 7);
        let stacked = a1.vstack(&a2).unwrap();
        for kind in KINDS {
            let whole = project(&stacked, kind, ell, seed).unwrap();
            let mut st = ProjectionState::new(kind, ell, d, seed).unwrap();
            for r in a1.rows() {
                st.update(r).unwrap();
            }
            // The second block only needs its global row numbers.
            let mut part = ProjectionState::new(kind, ell, d, seed).unwrap();
            for (i, r) in a2.rows().enumerate() {
                part.update_at(r, n1 + i).unwrap();
            }
            let merged = RowMatrix::from_dense(st.sketch() + part.sketch());
            prop_assert!(max_abs_diff(&whole, &merged) < 1e-10);
        }
    }

    #[test]
    fn hash_touches_one_row_and_osnap_s_rows(
        d in 1usize..5,
        ell in 1usize..40,
        s in 1usize..6,
        index in 0usize..10_000,
        seed in any::<u64>(),
    ) {
        let row = RowMatrix::from_rows(&[vec![1.0; d]]).unwrap();
        let touched = |kind| {
            let mut st = ProjectionState::new(kind, ell, d, seed).unwrap();
            st.update_at(row.row(0), index).unwrap();
            st.sketch().rows().into_iter().filter(|r| r.iter().any(|x| *x != 0.0)).count()
        };
        prop_assert_eq!(touched(ProjectionKind::Hash), 1);
        prop_assert_eq!(touched(ProjectionKind::Osnap { s }), s);
    }

    #[test]
    fn osnap_with_one_block_is_hashing(n in 1usize..40, d in 1usize..6, ell in 1usize..20, seed in any::<u64>()) {
        let a = gaussian(n, d, seed);
        prop_assert_eq!(
            project(&a, ProjectionKind::Hash, ell, seed).unwrap(),
            project(&a, ProjectionKind::Osnap { s: 1 }, ell, seed).unwrap()
        );
    }
}

#[test]
fn osnap_pads_to_a_multiple_of_s() {
    let a = gaussian(10, 3, 0);
    assert_eq!(project(&a, ProjectionKind::Osnap { s: 4 }, 10, 1).unwrap().n_rows(), 12);
    assert_eq!(project(&a, ProjectionKind::Osnap { s: 4 }, 12, 1).unwrap().n_rows(), 12);
}

#[test]
fn hadamard_squares_to_scaled_identity() {
    for n in [2usize, 4, 8] {
        let mut h = Array2::<f64>::eye(n);
        fwht_rows(&mut h);
        assert!(h.iter().all(|x| x.abs() == 1.0));
        let mut hh = h.clone();
        fwht_rows(&mut hh);
        assert_eq!(hh, Array2::eye(n) * n as f64);
    }
}

#[test]
fn fjlt_with_full_selector_preserves_covariance() {
    let a = gaussian(2, 3, 9);
    let b = fjlt_apply(&a, &[1.0, 1.0], &Array2::eye(2)).unwrap();
    assert!(max_abs_diff(&RowMatrix::from_dense(b.gram()), &RowMatrix::from_dense(a.gram())) < 1e-12);
    let a = gaussian(5, 3, 9);
    let b = fjlt_apply(&a, &[1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0], &Array2::eye(8)).unwrap();
    assert!(max_abs_diff(&RowMatrix::from_dense(b.gram()), &RowMatrix::from_dense(a.gram())) < 1e-12);
}

#[test]
fn fjlt_rejects_bad_shapes() {
    let a = gaussian(5, 3, 0);
    assert!(fjlt_apply(&a, &[1.0; 4], &Array2::eye(4)).is_err());
    assert!(fjlt_apply(&a, &[1.0; 6], &Array2::eye(6)).is_err());
    assert!(fjlt_sketch(&a, 6, None, &mut rng_from_seed(0)).is_err());
    assert!(fjlt_sketch(&a, 2, Some(0.0), &mut rng_from_seed(0)).is_err());
}

#[test]
fn fjlt_is_unbiased_on_a_small_input() {
    let a = gaussian(4, 3, 21);
    let trials = 10_000;
    let target = a.gram();
    let mut sum = Array2::<f64>::zeros((3, 3));
    let mut sum_sq = Array2::<f64>::zeros((3, 3));
    for t in 0..trials {
        let g = fjlt_sketch(&a, 2, None, &mut rng_from_seed(t)).unwrap().gram();
        sum_sq += &g.mapv(|x| x * x);
        sum += &g;
    }
    let nt = trials as f64;
    let mean = &sum / nt;
    let var = (&sum_sq / nt - mean.mapv(|x| x * x)) * (nt / (nt - 1.0));
    let se: Array1<f64> = var.iter().map(|v| (v / nt).sqrt()).collect();
    for ((m, t), s) in mean.iter().zip(target.iter()).zip(se.iter()) {
        assert!((m - t).abs() <= 3.0 * s + 1e-12, "{m} vs {t} (se {s})");
    }
}
