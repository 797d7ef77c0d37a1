//! Helpers shared by the integration tests: random inputs and a nalgebra
//! oracle for everything spectral.
#![allow(dead_code)]

use matsketch::rng::rng_from_seed;
use matsketch::RowMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, d: usize, seed: u64) -> RowMatrix {
    let mut rng = rng_from_seed(seed);
    let a = Array2::from_shape_simple_fn((n, d), || rng.sample::<f64, _>(StandardNormal));
    RowMatrix::from_dense(a)
}

/// Gaussian rows with geometrically decaying column scales, so there is a
/// real gap between head and tail.
pub fn decaying(n: usize, d: usize, seed: u64) -> RowMatrix {
    let mut a = gaussian(n, d, seed).into_dense();
    for (j, mut col) in a.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|x| x * 0.8f64.powi(j as i32));
    }
    RowMatrix::from_dense(a)
}

pub fn unit_vectors(count: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

pub fn to_na(a: &RowMatrix) -> DMatrix<f64> {
    let dense = a.dense();
    DMatrix::from_fn(dense.nrows(), dense.ncols(), |i, j| dense[[i, j]])
}

/// Eigenpairs of AᵀA, largest first.
pub fn gram_eigen(a: &RowMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = to_na(a);
    let eig = SymmetricEigen::new(m.transpose() * &m);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Right singular vectors of A plus `extra` random unit directions.
pub fn probe_directions(a: &RowMatrix, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = gram_eigen(a).1;
    dirs.extend(unit_vectors(extra, a.n_cols(), seed));
    dirs
}

/// ‖A − A_k‖_F².
pub fn tail_sq(a: &RowMatrix, k: usize) -> f64 {
    gram_eigen(a).0.iter().skip(k).sum()
}

/// ‖M‖₂ of a symmetric matrix via a dense eigendecomposition.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

pub fn cov_err_oracle(a: &RowMatrix, b: &RowMatrix) -> f64 {
    let (ma, mb) = (to_na(a), to_na(b));
    let diff = ma.transpose() * &ma - mb.transpose() * &mb;
    sym_spectral_norm(&diff) / a.frobenius_sq()
}

pub fn proj_err_oracle(a: &RowMatrix, b: &RowMatrix, k: usize) -> f64 {
    let (sb, vb) = gram_eigen(b);
    // Gram eigenvalues carry ~ε·λ₁ noise, so rank is judged well above that.
    let rank = sb.iter().filter(|&&s| s > 1e-10 * sb[0]).count();
    let kk = k.min(rank);
    let ma = to_na(a);
    let d = a.n_cols();
    let v = DMatrix::from_fn(d, kk, |i, j| vb[j][i]);
    let resid = &ma - &ma * &v * v.transpose();
    resid.norm_squared() / tail_sq(a, k)
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

/// Proptest settings without the on-disk regression file.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}
