//! Covariance and projection error between an input A and its sketch B.
//!
//! - cov-err  = ‖AᵀA − BᵀB‖₂ / ‖A‖_F²
//! - proj-err = ‖A − π_{B_k}(A)‖_F² / ‖A − A_k‖_F², where π_{B_k} projects onto the
//!   top-k right singular vectors of B (rank is truncated before projecting).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::linalg::{self, RankKProjection};
use crate::matrix::RowMatrix;

/// Projection rank used when none is given.
pub const DEFAULT_PROJ_K: usize = 10;

/// One (algorithm, ℓ, trial) measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub algo: String,
    pub ell: usize,
    pub trial: usize,
    pub seed: u64,
    pub cov_err: Option<f64>,
    /// Absent when not requested or when A is exactly rank <= k.
    pub proj_err: Option<f64>,
    pub wall_ns: Option<u64>,
    /// The sketch had rank below k, so proj-err used its whole row space.
    #[serde(default)]
    pub rank_deficient: bool,
}

/// Projection error plus whether B had fewer than k nonzero directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjErr {
    pub value: f64,
    pub rank_deficient: bool,
}

fn check_cols(a: &RowMatrix, b: &RowMatrix) -> Result<()> {
    if a.n_cols() != b.n_cols() {
        return Err(SketchError::DimensionMismatch {
            expected: a.n_cols(),
            found: b.n_cols(),
        });
    }
    Ok(())
}

pub fn cov_err(a: &RowMatrix, b: &RowMatrix) -> Result<f64> {
    check_cols(a, b)?;
    let fro = a.frobenius_sq();
    if fro <= 0.0 {
        return Err(SketchError::Undefined("cov-err of a zero matrix"));
    }
    let diff = a.gram() - b.gram();
    Ok(linalg::spectral_norm(diff.view())? / fro)
}

pub fn proj_err(a: &RowMatrix, b: &RowMatrix, k: usize) -> Result<ProjErr> {
    ErrorEvaluator::new(a)?.proj_err(b, k)
}

/// Caches the quantities of A that every sketch is measured against: `AᵀA`,
/// `‖A‖_F²` and the singular spectrum.
pub struct ErrorEvaluator<'a> {
    a: &'a RowMatrix,
    gram: Array2<f64>,
    fro: f64,
    sigma_sq: Vec<f64>,
}

impl<'a> ErrorEvaluator<'a> {
    pub fn new(a: &'a RowMatrix) -> Result<Self> {
        a.check_finite()?;
        let fro = a.frobenius_sq();
        if fro <= 0.0 {
            return Err(SketchError::Undefined("error metrics of a zero matrix"));
        }
        let spectrum = linalg::svd(a.dense().view())?;
        Ok(ErrorEvaluator {
            a,
            gram: a.gram(),
            fro,
            sigma_sq: spectrum.values.iter().map(|v| v * v).collect(),
        })
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.fro
    }

    /// `‖A − A_k‖_F²`; zero once k reaches the rank.
    pub fn tail_sq(&self, k: usize) -> f64 {
        self.sigma_sq.iter().skip(k).sum()
    }

    /// `‖A‖_F² / ‖A‖₂²`.
    pub fn numeric_rank(&self) -> f64 {
        self.fro / self.sigma_sq[0]
    }

    pub fn cov_err(&self, b: &RowMatrix) -> Result<f64> {
        check_cols(self.a, b)?;
        let diff = &self.gram - &b.gram();
        Ok(linalg::spectral_norm(diff.view())? / self.fro)
    }

    pub fn proj_err(&self, b: &RowMatrix, k: usize) -> Result<ProjErr> {
        check_cols(self.a, b)?;
        let limit = self.a.n_rows().min(self.a.n_cols());
        if k > limit {
            return Err(SketchError::invalid(format!(
                "projection rank k = {k} exceeds min(n, d) = {limit}"
            )));
        }
        let tail = self.tail_sq(k);
        if tail <= 0.0 {
            return Err(SketchError::ExactLowRank { k });
        }
        let (proj, rank_deficient) = if b.n_rows() == 0 {
            let empty = RankKProjection::new(Array2::zeros((0, b.n_cols())))?;
            (empty, k > 0)
        } else {
            let spectrum = linalg::svd(b.dense().view())?;
            RankKProjection::top_k(&spectrum, k)
        };
        let residual = linalg::projection_residual_sq(self.a, &proj);
        Ok(ProjErr {
            value: residual / tail,
            rank_deficient,
        })
    }
}
