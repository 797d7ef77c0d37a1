//! Row-major input matrices exposed as ordered row streams.

use std::borrow::Cow;

use ndarray::{Array2, ArrayView2};

use crate::error::{Result, SketchError};

/// One row of a [`RowMatrix`], borrowed from its storage.
#[derive(Clone, Copy, Debug)]
pub enum RowView<'a> {
    Dense(&'a [f64]),
    Sparse {
        dim: usize,
        indices: &'a [usize],
        values: &'a [f64],
    },
}

impl<'a> RowView<'a> {
    pub fn dim(&self) -> usize {
        match self {
            RowView::Dense(v) => v.len(),
            RowView::Sparse { dim, .. } => *dim,
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            RowView::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            RowView::Sparse { values, .. } => values.len(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            RowView::Dense(v) => v.iter().map(|x| x * x).sum(),
            RowView::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RowView::Dense(v) => v.iter().all(|x| *x == 0.0),
            RowView::Sparse { values, .. } => values.iter().all(|x| *x == 0.0),
        }
    }

    /// Inner product with a dense vector of the same dimension.
    pub fn dot(&self, other: &[f64]) -> f64 {
        match self {
            RowView::Dense(v) => v.iter().zip(other).map(|(a, b)| a * b).sum(),
            RowView::Sparse {
                indices, values, ..
            } => indices
                .iter()
                .zip(values.iter())
                .map(|(&j, v)| v * other[j])
                .sum(),
        }
    }

    /// `target += scale * self`.
    pub fn add_scaled_to(&self, target: &mut [f64], scale: f64) {
        match self {
            RowView::Dense(v) => {
                for (t, x) in target.iter_mut().zip(v.iter()) {
                    *t += scale * x;
                }
            }
            RowView::Sparse {
                indices, values, ..
            } => {
                for (&j, x) in indices.iter().zip(values.iter()) {
                    target[j] += scale * x;
                }
            }
        }
    }

    /// Overwrite `target` with `scale * self`.
    pub fn write_scaled(&self, target: &mut [f64], scale: f64) {
        match self {
            RowView::Dense(v) => {
                for (t, x) in target.iter_mut().zip(v.iter()) {
                    *t = scale * x;
                }
            }
            RowView::Sparse { .. } => {
                target.iter_mut().for_each(|t| *t = 0.0);
                self.add_scaled_to(target, scale);
            }
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.write_scaled(&mut out, 1.0);
        out
    }

    /// Rejects NaN and infinities; `row` only feeds the diagnostic.
    pub fn check_finite(&self, row: usize) -> Result<()> {
        let bad = match self {
            RowView::Dense(v) => v.iter().position(|x| !x.is_finite()),
            RowView::Sparse {
                indices, values, ..
            } => values
                .iter()
                .position(|x| !x.is_finite())
                .map(|p| indices[p]),
        };
        match bad {
            Some(col) => Err(SketchError::NonFinite { row, col }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(Array2<f64>),
    /// Compressed sparse rows; column indices strictly increasing within a row.
    Sparse {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// An n x d real matrix, dense or sparse, consumed as an ordered stream of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMatrix {
    n_cols: usize,
    storage: Storage,
}

impl RowMatrix {
    pub fn from_dense(a: Array2<f64>) -> Self {
        let a = if a.is_standard_layout() {
            a
        } else {
            a.as_standard_layout().into_owned()
        };
        RowMatrix {
            n_cols: a.ncols(),
            storage: Storage::Dense(a),
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_dense(Array2::zeros((n_rows, n_cols)))
    }

    /// Builds a dense matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(SketchError::DimensionMismatch {
                    expected: n_cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        let a = Array2::from_shape_vec((rows.len(), n_cols), data)
            .expect("row lengths checked above");
        Ok(Self::from_dense(a))
    }

    /// Builds a sparse matrix from per-row `(column, value)` lists.
    ///
    /// Columns must lie in `[0, n_cols)` and be strictly increasing within a row.
    pub fn from_sparse_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            let mut prev: Option<usize> = None;
            for &(j, v) in row {
                if j >= n_cols {
                    return Err(SketchError::invalid(format!(
                        "column index {j} out of range for {n_cols} columns"
                    )));
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(SketchError::invalid(format!(
                        "sparse row indices must be strictly increasing (saw {} then {j})",
                        prev.unwrap()
                    )));
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(RowMatrix {
            n_cols,
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
        })
    }

    pub fn n_rows(&self) -> usize {
        match &self.storage {
            Storage::Dense(a) => a.nrows(),
            Storage::Sparse { indptr, .. } => indptr.len() - 1,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        match &self.storage {
            Storage::Dense(a) => {
                let d = self.n_cols;
                let flat = a.as_slice().expect("dense storage is standard layout");
                RowView::Dense(&flat[i * d..(i + 1) * d])
            }
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let (lo, hi) = (indptr[i], indptr[i + 1]);
                RowView::Sparse {
                    dim: self.n_cols,
                    indices: &indices[lo..hi],
                    values: &values[lo..hi],
                }
            }
        }
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = RowView<'_>> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(a) => a.iter().filter(|x| **x != 0.0).count(),
            Storage::Sparse { values, .. } => values.iter().filter(|x| **x != 0.0).count(),
        }
    }

    /// Squared Frobenius norm, the sum of squared row norms.
    pub fn frobenius_sq(&self) -> f64 {
        match &self.storage {
            Storage::Dense(a) => a.iter().map(|x| x * x).sum(),
            Storage::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, r) in self.rows().enumerate() {
            r.check_finite(i)?;
        }
        Ok(())
    }

    /// Dense view, materialising sparse storage when needed.
    pub fn dense(&self) -> Cow<'_, Array2<f64>> {
        match &self.storage {
            Storage::Dense(a) => Cow::Borrowed(a),
            Storage::Sparse { .. } => {
                let mut out = Array2::zeros((self.n_rows(), self.n_cols));
                for (i, r) in self.rows().enumerate() {
                    let slot = out.row_mut(i).into_slice().expect("standard layout");
                    r.write_scaled(slot, 1.0);
                }
                Cow::Owned(out)
            }
        }
    }

    pub fn view(&self) -> Option<ArrayView2<'_, f64>> {
        match &self.storage {
            Storage::Dense(a) => Some(a.view()),
            Storage::Sparse { .. } => None,
        }
    }

    pub fn into_dense(self) -> Array2<f64> {
        match self.storage {
            Storage::Dense(a) => a,
            Storage::Sparse { .. } => self.dense().into_owned(),
        }
    }

    /// The d x d Gram matrix `AᵀA`.
    pub fn gram(&self) -> Array2<f64> {
        match &self.storage {
            Storage::Dense(a) => a.t().dot(a),
            Storage::Sparse { .. } => {
                let d = self.n_cols;
                let mut g = Array2::zeros((d, d));
                for r in self.rows() {
                    if let RowView::Sparse {
                        indices, values, ..
                    } = r
                    {
                        for (p, (&i, &vi)) in indices.iter().zip(values).enumerate() {
                            for (&j, &vj) in indices[p..].iter().zip(&values[p..]) {
                                g[[i, j]] += vi * vj;
                            }
                        }
                    }
                }
                for i in 0..d {
                    for j in 0..i {
                        g[[i, j]] = g[[j, i]];
                    }
                }
                g
            }
        }
    }

    /// `‖A x‖²` for a dense vector `x` of length d.
    pub fn apply_norm_sq(&self, x: &[f64]) -> f64 {
        self.rows().map(|r| r.dot(x).powi(2)).sum()
    }

    pub fn scaled(&self, c: f64) -> RowMatrix {
        let mut out = self.clone();
        match &mut out.storage {
            Storage::Dense(a) => a.mapv_inplace(|x| c * x),
            Storage::Sparse { values, .. } => values.iter_mut().for_each(|x| *x *= c),
        }
        out
    }

    /// Row-wise concatenation; the result is dense.
    pub fn vstack(&self, other: &RowMatrix) -> Result<RowMatrix> {
        if self.n_cols != other.n_cols {
            return Err(SketchError::DimensionMismatch {
                expected: self.n_cols,
                found: other.n_cols,
            });
        }
        let a = ndarray::concatenate(
            ndarray::Axis(0),
            &[self.dense().view(), other.dense().view()],
        )
        .expect("column counts checked above");
        Ok(RowMatrix::from_dense(a))
    }

    /// Copy of a subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> RowMatrix {
        let mut out = Array2::zeros((idx.len(), self.n_cols));
        for (k, &i) in idx.iter().enumerate() {
            let slot = out.row_mut(k).into_slice().expect("standard layout");
            self.row(i).write_scaled(slot, 1.0);
        }
        RowMatrix::from_dense(out)
    }
}

impl From<Array2<f64>> for RowMatrix {
    fn from(a: Array2<f64>) -> Self {
        RowMatrix::from_dense(a)
    }
}
