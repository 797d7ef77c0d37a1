//! Iterative row-update sketches: a shared buffer driver with pluggable
//! spectrum-shrinking rules.
//!
//! The driver keeps an ℓ x d buffer. Each incoming row fills a zero row; once
//! no zero row is left the buffer is rotated onto its right singular basis
//! (`B = S Vᵀ`), the rule rewrites the spectrum `S -> S'`, and the buffer becomes
//! `S' Vᵀ`. Every rule zeroes at least one row, so the next insert has room.
//!
//! | rule           | shrink δ             | affected values             |
//! |----------------|----------------------|-----------------------------|
//! | iSVD           | none                 | σ_ℓ set to 0                |
//! | α-FD (FD: α=1) | σ_ℓ²                 | last m = round(αℓ)          |
//! | Fast α-FD      | σ_t², t = ℓ−⌈αℓ/2⌉   | last ⌈αℓ⌉, floored at 0     |
//! | SpaceSaving    | σ_{ℓ−1}²             | σ_{ℓ−1} → 0, σ_ℓ² += δ      |
//! | Compensative   | as FD                | at the end σ̂² = σ'² + Δ     |

use ndarray::Array2;

use crate::error::{Result, SketchError};
use crate::linalg::{self, SINGULAR_CLAMP};
use crate::matrix::{RowMatrix, RowView};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReduceRule {
    /// Iterative SVD: drop the smallest direction, keep the rest untouched.
    Isvd,
    /// Parameterized Frequent Directions; `alpha = 1` is plain FD.
    Pfd { alpha: f64 },
    /// Fast parameterized FD; `alpha = 1` is FastFD.
    FastPfd { alpha: f64 },
    /// SpaceSaving Directions.
    SpaceSaving,
    /// FD with the removed mass added back at the end.
    Compensative,
}

impl ReduceRule {
    pub const FD: ReduceRule = ReduceRule::Pfd { alpha: 1.0 };
    pub const FAST_FD: ReduceRule = ReduceRule::FastPfd { alpha: 1.0 };

    pub fn validate(&self, ell: usize) -> Result<()> {
        match *self {
            ReduceRule::Pfd { alpha } | ReduceRule::FastPfd { alpha } => {
                check_alpha(alpha)?;
                if let ReduceRule::FastPfd { .. } = self {
                    if fast_threshold_index(ell, alpha) == 0 {
                        return Err(SketchError::invalid(format!(
                            "fast alpha-FD needs l - ceil(alpha*l/2) >= 1 (l = {ell}, alpha = {alpha})"
                        )));
                    }
                }
                Ok(())
            }
            ReduceRule::SpaceSaving if ell < 2 => {
                Err(SketchError::invalid("SpaceSaving Directions needs l >= 2"))
            }
            _ => Ok(()),
        }
    }

    /// Applies the rule to a non-increasing spectrum of length ℓ. Returns the
    /// new values and the shrink δ.
    pub fn apply(&self, values: &[f64]) -> Result<(Vec<f64>, f64)> {
        match *self {
            ReduceRule::Isvd => Ok((reduce_rank_isvd(values), 0.0)),
            ReduceRule::Pfd { alpha } => reduce_rank_pfd(values, alpha),
            ReduceRule::FastPfd { alpha } => reduce_rank_fast_pfd(values, alpha),
            ReduceRule::SpaceSaving => reduce_rank_ss(values),
            ReduceRule::Compensative => reduce_rank_pfd(values, 1.0),
        }
    }

    /// Number of trailing values the rule shrinks by δ, the `αℓ` in the
    /// Frobenius identity `‖A‖_F² − ‖B‖_F² = αℓΔ`. Only meaningful for α-FD and
    /// the compensative variant.
    pub fn affected(&self, ell: usize) -> usize {
        match *self {
            ReduceRule::Pfd { alpha } => pfd_affected(ell, alpha),
            ReduceRule::Compensative => ell,
            ReduceRule::FastPfd { alpha } => ceil_tol(alpha * ell as f64).min(ell),
            ReduceRule::Isvd => 0,
            ReduceRule::SpaceSaving => 1,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(SketchError::invalid(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

/// `⌈x⌉`, ignoring rounding noise such as 0.2 * 20 = 4.000000000000001.
fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

fn pfd_affected(ell: usize, alpha: f64) -> usize {
    ((alpha * ell as f64).round() as usize).clamp(1, ell)
}

/// 1-based index t = ℓ − ⌈αℓ/2⌉ whose squared value becomes the shrink.
fn fast_threshold_index(ell: usize, alpha: f64) -> usize {
    ell.saturating_sub(ceil_tol(alpha * ell as f64 / 2.0))
}

/// Keep the top ℓ−1 values; the ℓ-th becomes zero.
pub fn reduce_rank_isvd(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    if let Some(last) = out.last_mut() {
        *last = 0.0;
    }
    out
}

/// δ = σ_ℓ²; the last m = max(1, round(αℓ)) values become `√(σ_j² − δ)`.
pub fn reduce_rank_pfd(values: &[f64], alpha: f64) -> Result<(Vec<f64>, f64)> {
    check_alpha(alpha)?;
    let ell = values.len();
    if ell == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let delta = values[ell - 1].powi(2);
    let m = pfd_affected(ell, alpha);
    let mut out = values.to_vec();
    for v in &mut out[ell - m..] {
        *v = (*v * *v - delta).max(0.0).sqrt();
    }
    out[ell - 1] = 0.0;
    Ok((out, delta))
}

/// δ = σ_t² for t = ℓ − ⌈αℓ/2⌉; the last ⌈αℓ⌉ values become `√max(0, σ_j² − δ)`.
pub fn reduce_rank_fast_pfd(values: &[f64], alpha: f64) -> Result<(Vec<f64>, f64)> {
    check_alpha(alpha)?;
    let ell = values.len();
    if ell == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let t = fast_threshold_index(ell, alpha);
    if t == 0 {
        return Err(SketchError::invalid(format!(
            "fast alpha-FD needs l - ceil(alpha*l/2) >= 1 (l = {ell}, alpha = {alpha})"
        )));
    }
    let delta = values[t - 1].powi(2);
    let m = ceil_tol(alpha * ell as f64).min(ell);
    let mut out = values.to_vec();
    for v in &mut out[ell - m..] {
        *v = (*v * *v - delta).max(0.0).sqrt();
    }
    Ok((out, delta))
}

/// δ = σ_{ℓ−1}²; returns `(σ_1, …, σ_{ℓ−2}, 0, √(σ_ℓ² + δ))`.
pub fn reduce_rank_ss(values: &[f64]) -> Result<(Vec<f64>, f64)> {
    let ell = values.len();
    if ell < 2 {
        return Err(SketchError::invalid("SpaceSaving reduce needs at least two values"));
    }
    let delta = values[ell - 2].powi(2);
    let mut out = values.to_vec();
    out[ell - 2] = 0.0;
    out[ell - 1] = (values[ell - 1].powi(2) + delta).sqrt();
    Ok((out, delta))
}

/// Streaming state of one iterative sketch.
#[derive(Clone, Debug)]
pub struct IterativeSketch {
    ell: usize,
    dim: usize,
    rule: ReduceRule,
    /// Rows `[0, filled)` are the nonzero rows; the rest are zero.
    buffer: Array2<f64>,
    filled: usize,
    /// Leading rows known to be mutually orthogonal (the survivors of the last reduce).
    ortho_rows: usize,
    delta_total: f64,
    rows_seen: usize,
    reductions: usize,
}

impl IterativeSketch {
    pub fn new(ell: usize, dim: usize, rule: ReduceRule) -> Result<Self> {
        if ell < 2 {
            return Err(SketchError::invalid(format!("sketch size l must be >= 2, got {ell}")));
        }
        if dim == 0 {
            return Err(SketchError::invalid("dimension must be >= 1"));
        }
        rule.validate(ell)?;
        Ok(IterativeSketch {
            ell,
            dim,
            rule,
            buffer: Array2::zeros((ell, dim)),
            filled: 0,
            ortho_rows: 0,
            delta_total: 0.0,
            rows_seen: 0,
            reductions: 0,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn rule(&self) -> ReduceRule {
        self.rule
    }

    /// Total shrink Δ = Σ δ_i so far.
    pub fn delta_total(&self) -> f64 {
        self.delta_total
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Number of times the buffer filled up and was reduced.
    pub fn reductions(&self) -> usize {
        self.reductions
    }

    /// Count of nonzero buffer rows.
    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn buffer(&self) -> &Array2<f64> {
        &self.buffer
    }

    pub fn update(&mut self, row: RowView<'_>) -> Result<()> {
        if row.dim() != self.dim {
            return Err(SketchError::DimensionMismatch {
                expected: self.dim,
                found: row.dim(),
            });
        }
        row.check_finite(self.rows_seen)?;
        self.rows_seen += 1;
        if row.is_zero() {
            // A zero row lands in a zero slot and leaves the buffer unchanged.
            return Ok(());
        }
        let slot = self
            .buffer
            .row_mut(self.filled)
            .into_slice()
            .expect("standard layout");
        row.write_scaled(slot, 1.0);
        self.filled += 1;
        if self.filled == self.ell {
            self.reduce()?;
        }
        Ok(())
    }

    pub fn update_all(&mut self, a: &RowMatrix) -> Result<()> {
        for r in a.rows() {
            self.update(r)?;
        }
        Ok(())
    }

    fn reduce(&mut self) -> Result<()> {
        let ell = self.ell;
        // One new row on top of ℓ−1 orthogonal rows is the common case for every
        // rule that frees a single row per reduce.
        let sq = if self.ortho_rows == ell - 1 {
            linalg::rotate_arrowhead_to_spectrum(&mut self.buffer, ell)
        } else {
            linalg::rotate_rows_to_spectrum(&mut self.buffer, ell)
        };
        let top = sq[0].sqrt();
        let sigma: Vec<f64> = sq
            .iter()
            .map(|s2| {
                let s = s2.sqrt();
                if s > SINGULAR_CLAMP * top {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        let (mut new_sigma, mut delta) = self.rule.apply(&sigma)?;

        // A value that grows from zero (SpaceSaving moving mass onto σ_ℓ = 0)
        // needs a right singular direction the rotated buffer does not carry.
        let grows_from_zero = (0..ell).any(|j| sigma[j] == 0.0 && new_sigma[j] > 0.0);
        let completion = if grows_from_zero {
            let c = linalg::unit_orthogonal_to(self.buffer.view());
            if c.is_none() {
                // ℓ > d: the rows already span R^d, so a zero row is free and
                // there is nowhere to move mass. Only drop the zero rows.
                new_sigma = sigma.clone();
                delta = 0.0;
            }
            c
        } else {
            None
        };
        for j in 0..ell {
            if sigma[j] == 0.0 && new_sigma[j] > 0.0 {
                match &completion {
                    Some(v) => {
                        for (dst, x) in self.buffer.row_mut(j).iter_mut().zip(v) {
                            *dst = x * new_sigma[j];
                        }
                    }
                    None => unreachable!("rule skipped above when no direction exists"),
                }
            } else if new_sigma[j] == 0.0 {
                self.buffer.row_mut(j).fill(0.0);
            } else if new_sigma[j] != sigma[j] {
                let f = new_sigma[j] / sigma[j];
                self.buffer.row_mut(j).mapv_inplace(|x| x * f);
            }
        }
        self.delta_total += delta;
        self.reductions += 1;
        self.compact();
        self.ortho_rows = self.filled;
        debug_assert!(self.filled < ell, "reduce must free at least one row");
        Ok(())
    }

    /// Moves nonzero rows to the front, preserving their order.
    fn compact(&mut self) {
        let mut write = 0;
        for read in 0..self.ell {
            let nonzero = self.buffer.row(read).iter().any(|x| *x != 0.0);
            if nonzero {
                if read != write {
                    let row = self.buffer.row(read).to_owned();
                    self.buffer.row_mut(write).assign(&row);
                    self.buffer.row_mut(read).fill(0.0);
                }
                write += 1;
            }
        }
        self.filled = write;
    }

    /// The ℓ x d sketch. The compensative rule lifts every squared singular
    /// value by Δ; every other rule returns the buffer as is.
    pub fn finalize(self) -> Result<RowMatrix> {
        if self.rule != ReduceRule::Compensative || self.delta_total == 0.0 {
            return Ok(RowMatrix::from_dense(self.buffer));
        }
        let spectrum = linalg::svd(self.buffer.view())?;
        let mut out = Array2::zeros((self.ell, self.dim));
        for (j, (sigma, v)) in spectrum
            .values
            .iter()
            .zip(spectrum.right_basis.rows())
            .enumerate()
        {
            let lifted = (sigma * sigma + self.delta_total).sqrt();
            out.row_mut(j).assign(&v.mapv(|x| x * lifted));
        }
        Ok(RowMatrix::from_dense(out))
    }
}

/// Streams every row of `a` through a fresh sketch. Returns the sketch and Δ.
pub fn sketch(a: &RowMatrix, ell: usize, rule: ReduceRule) -> Result<(RowMatrix, f64)> {
    let mut state = IterativeSketch::new(ell, a.n_cols(), rule)?;
    state.update_all(a)?;
    let delta = state.delta_total();
    Ok((state.finalize()?, delta))
}
