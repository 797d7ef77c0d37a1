//! Row-sampling sketches. Every output row is a rescaled input row.
//!
//! - [`NormSampler`]: ℓ independent weighted reservoirs, i.i.d. draws with
//!   probability ∝ ‖a_i‖², each draw rescaled to ‖A‖_F²/ℓ.
//! - [`leverage_sample`] / [`deterministic_leverage`]: two-pass, scores from the
//!   top-k left singular subspace.
//! - [`PrioritySampler`]: priorities w/u, threshold weights max(w, τ).
//! - [`VarOptSampler`]: threshold sampling whose weights sum to ‖A‖_F² exactly.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;

use crate::error::{Result, SketchError};
use crate::linalg;
use crate::matrix::{RowMatrix, RowView};
use crate::rng::SketchRng;

/// Leverage-score rank used when none is given.
pub const DEFAULT_LEVERAGE_K: usize = 10;

/// A retained row, already rescaled so that `‖row‖² = weight_sq`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSample {
    pub row: Vec<f64>,
    pub weight_sq: f64,
    pub source_index: usize,
}

impl WeightedSample {
    fn rescaled(row: &[f64], w: f64, target: f64, source_index: usize) -> Self {
        let f = (target / w).sqrt();
        WeightedSample {
            row: row.iter().map(|x| x * f).collect(),
            weight_sq: target,
            source_index,
        }
    }
}

/// Stacks samples into an `len x dim` matrix in the given order.
pub fn samples_to_matrix(samples: &[WeightedSample], dim: usize) -> RowMatrix {
    let mut out = Array2::zeros((samples.len(), dim));
    for (mut dst, s) in out.rows_mut().into_iter().zip(samples) {
        dst.iter_mut().zip(&s.row).for_each(|(d, x)| *d = *x);
    }
    RowMatrix::from_dense(out)
}

fn check_row(row: &RowView<'_>, dim: usize, index: usize) -> Result<()> {
    if row.dim() != dim {
        return Err(SketchError::DimensionMismatch {
            expected: dim,
            found: row.dim(),
        });
    }
    row.check_finite(index)
}

fn check_ell(ell: usize) -> Result<()> {
    if ell == 0 {
        Err(SketchError::invalid("sample size l must be >= 1"))
    } else {
        Ok(())
    }
}

/// Sampling with replacement proportional to squared row norm.
///
/// Slot j keeps its candidate until a new row of weight w replaces it with
/// probability w / W (W the running total). The slots are independent, so the
/// number replaced per row is Binomial(ℓ, w/W) and the replaced slots are a
/// uniform subset; this gives the same law as flipping ℓ coins in O(#replaced).
pub struct NormSampler {
    ell: usize,
    dim: usize,
    rng: SketchRng,
    slots: Vec<usize>,
    /// Source index -> (row, number of slots holding it).
    held: HashMap<usize, (Vec<f64>, usize)>,
    total: f64,
    rows_seen: usize,
}

impl NormSampler {
    pub fn new(ell: usize, dim: usize, rng: SketchRng) -> Result<Self> {
        check_ell(ell)?;
        Ok(NormSampler {
            ell,
            dim,
            rng,
            slots: Vec::new(),
            held: HashMap::new(),
            total: 0.0,
            rows_seen: 0,
        })
    }

    pub fn update(&mut self, row: RowView<'_>) -> Result<()> {
        let index = self.rows_seen;
        check_row(&row, self.dim, index)?;
        self.rows_seen += 1;
        let w = row.norm_sq();
        if w == 0.0 {
            return Ok(());
        }
        self.total += w;
        let p = w / self.total;
        let replaced: Vec<usize> = if self.slots.is_empty() {
            self.slots = vec![index; self.ell];
            self.held.insert(index, (row.to_vec(), self.ell));
            return Ok(());
        } else if p >= 1.0 {
            (0..self.ell).collect()
        } else {
            let count = Binomial::new(self.ell as u64, p)
                .expect("probability in [0, 1)")
                .sample(&mut self.rng) as usize;
            if count == 0 {
                return Ok(());
            }
            rand::seq::index::sample(&mut self.rng, self.ell, count).into_vec()
        };
        for &slot in &replaced {
            let old = self.slots[slot];
            let entry = self.held.get_mut(&old).expect("slot row is held");
            entry.1 -= 1;
            if entry.1 == 0 {
                self.held.remove(&old);
            }
            self.slots[slot] = index;
        }
        self.held.insert(index, (row.to_vec(), replaced.len()));
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn samples(&self) -> Result<Vec<WeightedSample>> {
        if self.slots.is_empty() {
            return Err(SketchError::Undefined("norm sampling of an all-zero stream"));
        }
        let target = self.total / self.ell as f64;
        Ok(self
            .slots
            .iter()
            .map(|&i| {
                let row = &self.held[&i].0;
                let w: f64 = row.iter().map(|x| x * x).sum();
                WeightedSample::rescaled(row, w, target, i)
            })
            .collect())
    }

    pub fn finalize(self) -> Result<RowMatrix> {
        Ok(samples_to_matrix(&self.samples()?, self.dim))
    }
}

pub fn norm_sample(a: &RowMatrix, ell: usize, rng: SketchRng) -> Result<RowMatrix> {
    let mut s = NormSampler::new(ell, a.n_cols(), rng)?;
    for r in a.rows() {
        s.update(r)?;
    }
    s.finalize()
}

/// Rank-k leverage scores `s_i = Σ_{j≤k} (a_i·v_j)² / σ_j²`, the squared row
/// norms of the top-k left singular vectors. They sum to k.
pub fn leverage_scores(a: &RowMatrix, k: usize) -> Result<Vec<f64>> {
    a.check_finite()?;
    if k == 0 {
        return Err(SketchError::invalid("leverage rank k must be >= 1"));
    }
    let spectrum = linalg::svd(a.dense().view())?;
    let rank = spectrum.rank();
    if k > rank {
        return Err(SketchError::invalid(format!(
            "leverage rank k = {k} exceeds rank(A) = {rank}"
        )));
    }
    let basis = spectrum.right_basis.slice(ndarray::s![..k, ..]).to_owned();
    let inv: Vec<f64> = spectrum.values[..k].iter().map(|s| 1.0 / (s * s)).collect();
    Ok(a
        .rows()
        .map(|r| {
            basis
                .rows()
                .into_iter()
                .zip(&inv)
                .map(|(v, w)| {
                    let c = r.dot(v.as_slice().expect("standard layout"));
                    c * c * w
                })
                .sum::<f64>()
                .min(1.0)
        })
        .collect())
}

/// ℓ i.i.d. draws with `p_i = s_i / k`, row i rescaled by `1/√(ℓ p_i)`.
pub fn leverage_sample(a: &RowMatrix, ell: usize, k: usize, rng: &mut SketchRng) -> Result<RowMatrix> {
    check_ell(ell)?;
    let scores = leverage_scores(a, k)?;
    let total: f64 = scores.iter().sum();
    let dist = WeightedIndex::new(&scores)
        .map_err(|e| SketchError::invalid(format!("leverage scores not samplable: {e}")))?;
    let mut out = Array2::zeros((ell, a.n_cols()));
    for mut dst in out.rows_mut() {
        let i = dist.sample(rng);
        let p = scores[i] / total;
        let f = 1.0 / (ell as f64 * p).sqrt();
        a.row(i).write_scaled(dst.as_slice_mut().expect("standard layout"), f);
    }
    Ok(RowMatrix::from_dense(out))
}

/// The ℓ rows with the largest leverage scores, verbatim and in stream order.
/// Scores equal up to rounding (relative 1e-12) tie, and the earlier row wins.
pub fn deterministic_leverage(a: &RowMatrix, ell: usize, k: usize) -> Result<RowMatrix> {
    check_ell(ell)?;
    let scores = leverage_scores(a, k)?;
    let key = |s: f64| (s * 1e12).round();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| key(scores[j]).total_cmp(&key(scores[i])).then(i.cmp(&j)));
    order.truncate(ell);
    order.sort_unstable();
    Ok(a.select_rows(&order))
}

#[derive(Clone, Debug)]
struct Entry {
    key: f64,
    index: usize,
    weight: f64,
    row: Vec<f64>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Later rows compare smaller on ties, so they are evicted first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(other.index.cmp(&self.index))
    }
}

/// Priority sampling: keep the ℓ rows of largest priority `w/u`; the threshold τ
/// is the largest priority ever evicted, i.e. the (ℓ+1)-th largest seen.
pub struct PrioritySampler {
    ell: usize,
    dim: usize,
    rng: SketchRng,
    heap: BinaryHeap<Reverse<Entry>>,
    tau: f64,
    rows_seen: usize,
}

impl PrioritySampler {
    pub fn new(ell: usize, dim: usize, rng: SketchRng) -> Result<Self> {
        check_ell(ell)?;
        Ok(PrioritySampler {
            ell,
            dim,
            rng,
            heap: BinaryHeap::with_capacity(ell + 1),
            tau: 0.0,
            rows_seen: 0,
        })
    }

    pub fn update(&mut self, row: RowView<'_>) -> Result<()> {
        let u = 1.0 - self.rng.random::<f64>();
        self.update_with_uniform(row, u)
    }

    /// As [`update`](Self::update) with the uniform draw `u ∈ (0, 1]` supplied.
    pub fn update_with_uniform(&mut self, row: RowView<'_>, u: f64) -> Result<()> {
        let index = self.rows_seen;
        check_row(&row, self.dim, index)?;
        if !(u > 0.0 && u <= 1.0) {
            return Err(SketchError::invalid(format!("uniform draw must lie in (0, 1], got {u}")));
        }
        self.rows_seen += 1;
        let w = row.norm_sq();
        if w == 0.0 {
            return Ok(());
        }
        self.heap.push(Reverse(Entry {
            key: w / u,
            index,
            weight: w,
            row: row.to_vec(),
        }));
        if self.heap.len() > self.ell {
            let Reverse(evicted) = self.heap.pop().expect("heap is non-empty");
            self.tau = self.tau.max(evicted.key);
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Retained rows in stream order, each with squared norm `max(w, τ)`.
    pub fn samples(&self) -> Vec<WeightedSample> {
        let mut kept: Vec<&Entry> = self.heap.iter().map(|r| &r.0).collect();
        kept.sort_by_key(|e| e.index);
        kept.into_iter()
            .map(|e| WeightedSample::rescaled(&e.row, e.weight, e.weight.max(self.tau), e.index))
            .collect()
    }

    pub fn finalize(self) -> RowMatrix {
        samples_to_matrix(&self.samples(), self.dim)
    }
}

pub fn priority_sample(a: &RowMatrix, ell: usize, rng: SketchRng) -> Result<RowMatrix> {
    let mut s = PrioritySampler::new(ell, a.n_cols(), rng)?;
    for r in a.rows() {
        s.update(r)?;
    }
    Ok(s.finalize())
}

/// VarOpt sampling. Rows heavier than τ sit in a min-heap at their own weight;
/// the rest share weight τ. Each overflow raises τ to `W_S / (|S| − 1)` over the
/// small set S and drops exactly one small row, so the kept weights always sum
/// to the stream's total squared norm.
pub struct VarOptSampler {
    ell: usize,
    dim: usize,
    rng: SketchRng,
    large: BinaryHeap<Reverse<Entry>>,
    small: Vec<Entry>,
    tau: f64,
    total: f64,
    rows_seen: usize,
}

impl VarOptSampler {
    pub fn new(ell: usize, dim: usize, rng: SketchRng) -> Result<Self> {
        check_ell(ell)?;
        Ok(VarOptSampler {
            ell,
            dim,
            rng,
            large: BinaryHeap::with_capacity(ell + 1),
            small: Vec::with_capacity(ell + 1),
            tau: 0.0,
            total: 0.0,
            rows_seen: 0,
        })
    }

    pub fn update(&mut self, row: RowView<'_>) -> Result<()> {
        let index = self.rows_seen;
        check_row(&row, self.dim, index)?;
        self.rows_seen += 1;
        let w = row.norm_sq();
        if w == 0.0 {
            return Ok(());
        }
        self.total += w;
        let entry = Entry {
            key: w,
            index,
            weight: w,
            row: row.to_vec(),
        };
        if self.large.len() + self.small.len() < self.ell {
            self.large.push(Reverse(entry));
            return Ok(());
        }

        let mut moved: Vec<Entry> = Vec::new();
        let mut w_small = self.tau * self.small.len() as f64;
        if w > self.tau {
            self.large.push(Reverse(entry));
        } else {
            w_small += w;
            moved.push(entry);
        }
        loop {
            let size = self.small.len() + moved.len();
            let Some(Reverse(min)) = self.large.peek() else { break };
            if size >= 2 && min.weight * (size - 1) as f64 >= w_small {
                break;
            }
            let Reverse(e) = self.large.pop().expect("peeked");
            w_small += e.weight;
            moved.push(e);
        }
        let size = self.small.len() + moved.len();
        let new_tau = w_small / (size - 1) as f64;

        // One uniform picks the dropped row: small rows from before go with
        // probability 1 − τ/τ' each, newly moved rows with 1 − w/τ'.
        let mut r: f64 = self.rng.random();
        let mut drop_moved = None;
        for (i, e) in moved.iter().enumerate() {
            r -= 1.0 - e.weight / new_tau;
            if r < 0.0 {
                drop_moved = Some(i);
                break;
            }
        }
        match drop_moved {
            Some(i) => {
                moved.swap_remove(i);
            }
            None if !self.small.is_empty() => {
                let p = 1.0 - self.tau / new_tau;
                let i = if p > 0.0 { (r / p) as usize } else { 0 };
                self.small.swap_remove(i.min(self.small.len() - 1));
            }
            // Rounding left a sliver of probability unassigned.
            None => {
                moved.pop();
            }
        }
        self.small.extend(moved);
        self.tau = new_tau;
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// Kept rows in stream order: heavy rows at their own weight, the rest at τ.
    pub fn samples(&self) -> Vec<WeightedSample> {
        let mut out: Vec<WeightedSample> = self
            .large
            .iter()
            .map(|Reverse(e)| WeightedSample::rescaled(&e.row, e.weight, e.weight, e.index))
            .chain(
                self.small
                    .iter()
                    .map(|e| WeightedSample::rescaled(&e.row, e.weight, self.tau, e.index)),
            )
            .collect();
        out.sort_by_key(|s| s.source_index);
        out
    }

    pub fn finalize(self) -> RowMatrix {
        samples_to_matrix(&self.samples(), self.dim)
    }
}

pub fn varopt_sample(a: &RowMatrix, ell: usize, rng: SketchRng) -> Result<RowMatrix> {
    let mut s = VarOptSampler::new(ell, a.n_cols(), rng)?;
    for r in a.rows() {
        s.update(r)?;
    }
    Ok(s.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    #[test]
    fn norm_sampling_skips_zero_rows() {
        let a = RowMatrix::from_dense(array![[2.0, 0.0], [0.0, 0.0]]);
        let b = norm_sample(&a, 7, rng_from_seed(1)).unwrap().into_dense();
        for r in b.rows() {
            assert_eq!(r[1], 0.0);
            assert!((r[0].abs() - 2.0 / 7f64.sqrt()).abs() < 1e-12);
        }
        // ℓ copies at ‖A‖²/ℓ each.
        let fro: f64 = b.iter().map(|x| x * x).sum();
        assert!((fro - 4.0).abs() < 1e-12);
    }

    #[test]
    fn norm_sampling_all_zero_rejected() {
        let a = RowMatrix::zeros(3, 2);
        assert!(norm_sample(&a, 2, rng_from_seed(0)).is_err());
    }

    #[test]
    fn norm_sampling_equal_rows_split_evenly() {
        let a = RowMatrix::from_dense(array![[1.0, 0.0], [0.0, 1.0]]);
        let b = norm_sample(&a, 1000, rng_from_seed(42)).unwrap().into_dense();
        let first = b.rows().into_iter().filter(|r| r[0] != 0.0).count();
        assert!((450..=550).contains(&first), "first row chosen {first} times");
    }

    #[test]
    fn leverage_scores_of_diagonal() {
        let a = RowMatrix::from_dense(array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
        let s = leverage_scores(&a, 1).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12 && s[2].abs() < 1e-12);
        assert!(leverage_scores(&a, 4).is_err());
    }

    #[test]
    fn leverage_sample_of_diagonal() {
        let a = RowMatrix::from_dense(array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
        let b = leverage_sample(&a, 5, 1, &mut rng_from_seed(3)).unwrap().into_dense();
        for r in b.rows() {
            assert!((r[0] * r[0] - 9.0 / 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_leverage_picks_top_rows() {
        let a = RowMatrix::from_dense(array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]);
        let b = deterministic_leverage(&a, 2, 2).unwrap().into_dense();
        assert_eq!(b, array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0]]);
        let eye = RowMatrix::from_dense(Array2::eye(4));
        let b = deterministic_leverage(&eye, 2, 4).unwrap().into_dense();
        assert_eq!(b, array![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]);
    }

    #[test]
    fn priority_with_pinned_uniforms() {
        let mut s = PrioritySampler::new(1, 1, rng_from_seed(0)).unwrap();
        s.update_with_uniform(RowView::Dense(&[2.0]), 0.5).unwrap();
        s.update_with_uniform(RowView::Dense(&[1.0]), 0.5).unwrap();
        assert_eq!(s.tau(), 2.0);
        let kept = s.samples();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].source_index, 0);
        assert_eq!(kept[0].weight_sq, 4.0);
    }

    #[test]
    fn priority_underfull_keeps_everything() {
        let a = RowMatrix::from_dense(array![[1.0, 2.0], [3.0, 0.0]]);
        let b = priority_sample(&a, 5, rng_from_seed(9)).unwrap();
        assert_eq!(b, a);
    }

    #[test]
    fn varopt_equal_weights() {
        let a = RowMatrix::from_dense(Array2::eye(100));
        let mut s = VarOptSampler::new(10, 100, rng_from_seed(5)).unwrap();
        let mut last_tau = 0.0;
        for r in a.rows() {
            s.update(r).unwrap();
            assert!(s.tau() >= last_tau);
            last_tau = s.tau();
        }
        assert!((s.tau() - 10.0).abs() < 1e-9);
        let kept = s.samples();
        assert_eq!(kept.len(), 10);
        for k in &kept {
            assert!((k.weight_sq - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn varopt_underfull_is_identity() {
        let a = RowMatrix::from_dense(array![[1.0, 2.0], [3.0, 0.0], [0.5, 0.5]]);
        let b = varopt_sample(&a, 3, rng_from_seed(2)).unwrap();
        assert_eq!(b, a);
    }
}
