//! Linear sketches `B = SA`.
//!
//! SIGN, HASH and OSNAP are streaming: each entry of S is a seeded function of
//! (output row, input row index), so nothing but the ℓ x d accumulator is
//! stored. FJLT mixes all n rows through a Hadamard transform and is applied
//! in bulk.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SketchError};
use crate::matrix::{RowMatrix, RowView};
use crate::rng::{mix, SketchRng};

/// Number of stacked hash blocks in OSNAP unless overridden.
pub const DEFAULT_OSNAP_S: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionKind {
    /// Dense ±1/√ℓ entries.
    Sign,
    /// Count sketch: one ±1 per input row.
    Hash,
    /// `s` stacked count sketches, each scaled by 1/√s.
    Osnap { s: usize },
}

impl ProjectionKind {
    /// Output rows for a requested ℓ: OSNAP pads ℓ up to a multiple of s.
    pub fn output_rows(&self, ell: usize) -> usize {
        match *self {
            ProjectionKind::Osnap { s } => ell.div_ceil(s) * s,
            _ => ell,
        }
    }
}

/// Bucket in `[0, width)` and sign for input row `index` in hash block `block`.
#[inline]
fn bucket_and_sign(seed: u64, block: u64, index: u64, width: usize) -> (usize, f64) {
    let h = mix(mix(seed, block), index);
    // Multiply-shift keeps the bucket unbiased for any width; the low bit gives the sign.
    let bucket = ((u128::from(h) * width as u128) >> 64) as usize;
    let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

/// Streaming state of a SIGN, HASH or OSNAP sketch.
#[derive(Clone, Debug)]
pub struct ProjectionState {
    kind: ProjectionKind,
    ell: usize,
    dim: usize,
    seed: u64,
    accum: Array2<f64>,
    rows_seen: usize,
}

impl ProjectionState {
    pub fn new(kind: ProjectionKind, ell: usize, dim: usize, seed: u64) -> Result<Self> {
        if ell == 0 {
            return Err(SketchError::invalid("sketch size l must be >= 1"));
        }
        if let ProjectionKind::Osnap { s } = kind {
            if s == 0 {
                return Err(SketchError::invalid("OSNAP needs s >= 1"));
            }
        }
        let rows = kind.output_rows(ell);
        Ok(ProjectionState {
            kind,
            ell: rows,
            dim,
            seed,
            accum: Array2::zeros((rows, dim)),
            rows_seen: 0,
        })
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    /// Output rows, after any OSNAP padding.
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Adds the next row of the stream, numbered by arrival.
    pub fn update(&mut self, row: RowView<'_>) -> Result<()> {
        self.update_at(row, self.rows_seen)
    }

    /// Adds `row` as column `row_index` of S.
    pub fn update_at(&mut self, row: RowView<'_>, row_index: usize) -> Result<()> {
        if row.dim() != self.dim {
            return Err(SketchError::DimensionMismatch {
                expected: self.dim,
                found: row.dim(),
            });
        }
        row.check_finite(row_index)?;
        self.rows_seen += 1;
        if row.is_zero() {
            return Ok(());
        }
        let i = row_index as u64;
        match self.kind {
            ProjectionKind::Sign => {
                let scale = 1.0 / (self.ell as f64).sqrt();
                let mut bits = 0u64;
                for j in 0..self.ell {
                    if j % 64 == 0 {
                        bits = mix(mix(self.seed, i), (j / 64) as u64);
                    }
                    let s = if (bits >> (j % 64)) & 1 == 0 { scale } else { -scale };
                    self.add_row(j, &row, s);
                }
            }
            ProjectionKind::Hash => {
                let (b, s) = bucket_and_sign(self.seed, 0, i, self.ell);
                self.add_row(b, &row, s);
            }
            ProjectionKind::Osnap { s } => {
                let width = self.ell / s;
                let scale = 1.0 / (s as f64).sqrt();
                for block in 0..s {
                    let (b, sign) = bucket_and_sign(self.seed, block as u64, i, width);
                    self.add_row(block * width + b, &row, sign * scale);
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn add_row(&mut self, j: usize, row: &RowView<'_>, scale: f64) {
        let dst = self
            .accum
            .row_mut(j)
            .into_slice()
            .expect("standard layout");
        row.add_scaled_to(dst, scale);
    }

    pub fn sketch(&self) -> &Array2<f64> {
        &self.accum
    }

    pub fn finalize(self) -> RowMatrix {
        RowMatrix::from_dense(self.accum)
    }
}

/// Streams all rows of `a` through a fresh projection.
pub fn project(a: &RowMatrix, kind: ProjectionKind, ell: usize, seed: u64) -> Result<RowMatrix> {
    let mut st = ProjectionState::new(kind, ell, a.n_cols(), seed)?;
    for r in a.rows() {
        st.update(r)?;
    }
    Ok(st.finalize())
}

/// Unnormalised Walsh–Hadamard transform across the rows of `x` (whose row
/// count must be a power of two): `x <- H x`, `H H = N I`.
pub fn fwht_rows(x: &mut Array2<f64>) {
    let n = x.nrows();
    assert!(n.is_power_of_two(), "row count {n} is not a power of two");
    let d = x.ncols();
    let data = x.as_slice_mut().expect("standard layout");
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (top, bottom) = data.split_at_mut((i + h) * d);
                let a = &mut top[i * d..(i + 1) * d];
                let b = &mut bottom[..d];
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = u + v;
                    *y = u - v;
                }
            }
        }
        h *= 2;
    }
}

/// Sparsity of the FJLT's P for an n-row input of dimension d:
/// `min(1, (log₂ n)² / d)`.
pub fn fjlt_default_q(n: usize, d: usize) -> f64 {
    let l = (n.max(2) as f64).log2();
    (l * l / d.max(1) as f64).min(1.0)
}

/// `B = P (H/√N) D A` for explicit `D` (length-N ±1 diagonal) and `P` (ℓ x N),
/// with A zero-padded to N = `d_signs.len()` rows.
pub fn fjlt_apply(a: &RowMatrix, d_signs: &[f64], p: &Array2<f64>) -> Result<RowMatrix> {
    let big_n = d_signs.len();
    if !big_n.is_power_of_two() || big_n < a.n_rows() {
        return Err(SketchError::invalid(format!(
            "D must have a power-of-two length >= n = {}, got {big_n}",
            a.n_rows()
        )));
    }
    if p.ncols() != big_n {
        return Err(SketchError::DimensionMismatch {
            expected: big_n,
            found: p.ncols(),
        });
    }
    let mut x = Array2::zeros((big_n, a.n_cols()));
    for (i, r) in a.rows().enumerate() {
        r.write_scaled(x.row_mut(i).into_slice().expect("standard layout"), d_signs[i]);
    }
    fwht_rows(&mut x);
    x /= (big_n as f64).sqrt();
    Ok(RowMatrix::from_dense(p.dot(&x)))
}

/// Fast JLT with P entries `Bernoulli(q) · N(0, 1/(qℓ))`, so `E[BᵀB] = AᵀA`.
/// `q = None` uses [`fjlt_default_q`].
pub fn fjlt_sketch(a: &RowMatrix, ell: usize, q: Option<f64>, rng: &mut SketchRng) -> Result<RowMatrix> {
    let n = a.n_rows();
    if ell == 0 || ell > n {
        return Err(SketchError::invalid(format!(
            "FJLT needs 1 <= l <= n (l = {ell}, n = {n})"
        )));
    }
    let q = q.unwrap_or_else(|| fjlt_default_q(n, a.n_cols()));
    if !(q > 0.0 && q <= 1.0) {
        return Err(SketchError::invalid(format!("FJLT sparsity q must lie in (0, 1], got {q}")));
    }
    let big_n = n.next_power_of_two();
    let d_signs: Vec<f64> = (0..big_n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let std = 1.0 / (q * ell as f64).sqrt();
    let p = Array2::from_shape_simple_fn((ell, big_n), || {
        if q >= 1.0 || rng.random::<f64>() < q {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        } else {
            0.0
        }
    });
    fjlt_apply(a, &d_signs, &p)
}
