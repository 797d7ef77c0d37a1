//! Synthetic generators, matrix file I/O and summary statistics.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::linalg;
use crate::matrix::RowMatrix;
use crate::rng::{rng_from_seed, sub_seed, SketchRng};

/// Singular values at or below this fraction of σ₁ do not count toward rank.
pub const RANK_TOL: f64 = 1e-10;

/// How the signal strengths `D_ii` fall off in [`RandomNoisy`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    /// `D_ii = 1 − (i−1)/m`: the signal fades out across its own m directions.
    #[default]
    Signal,
    /// `D_ii = 1 − (i−1)/d`: nearly flat for m ≪ d.
    Ambient,
}

/// `A = S D U + F/ζ`: an m-dimensional Gaussian signal along a random
/// m-dimensional subspace plus full-dimensional Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomNoisy {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Noise divisor; `f64::INFINITY` drops the noise term.
    pub zeta: f64,
    #[serde(default)]
    pub decay: Decay,
}

impl Default for RandomNoisy {
    fn default() -> Self {
        RandomNoisy {
            n: 10_000,
            d: 500,
            m: 30,
            zeta: 10.0,
            decay: Decay::Signal,
        }
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SketchRng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

/// An `m x d` matrix with orthonormal rows, from the QR of a Gaussian.
fn random_row_orthonormal(m: usize, d: usize, rng: &mut SketchRng) -> Array2<f64> {
    let g = gaussian_matrix(d, m, rng);
    let (q, _) = linalg::householder_qr(g.view(), true);
    q.expect("Q requested").reversed_axes().as_standard_layout().into_owned()
}

impl RandomNoisy {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.m == 0 {
            return Err(SketchError::invalid("random-noisy needs n, d, m >= 1"));
        }
        if self.m >= self.d {
            return Err(SketchError::invalid(format!(
                "random-noisy needs m < d (m = {}, d = {})",
                self.m, self.d
            )));
        }
        if self.zeta.is_nan() || self.zeta <= 0.0 {
            return Err(SketchError::invalid(format!("zeta must be positive, got {}", self.zeta)));
        }
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let denom = match self.decay {
            Decay::Signal => self.m,
            Decay::Ambient => self.d,
        } as f64;
        (0..self.m).map(|i| 1.0 - i as f64 / denom).collect()
    }

    pub fn generate(&self, seed: u64) -> Result<RowMatrix> {
        self.validate()?;
        let mut rng = rng_from_seed(sub_seed(seed, "random-noisy/rotation"));
        let u = random_row_orthonormal(self.m, self.d, &mut rng);
        let mut rng = rng_from_seed(sub_seed(seed, "random-noisy/signal"));
        let mut s = gaussian_matrix(self.n, self.m, &mut rng);
        for (mut col, dii) in s.columns_mut().into_iter().zip(self.diagonal()) {
            col *= dii;
        }
        let mut a = s.dot(&u);
        if self.zeta.is_finite() {
            let mut rng = rng_from_seed(sub_seed(seed, "random-noisy/noise"));
            let inv = 1.0 / self.zeta;
            a.iter_mut().for_each(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += z * inv;
            });
        }
        Ok(RowMatrix::from_dense(a))
    }
}

pub fn gen_random_noisy(n: usize, d: usize, m: usize, zeta: f64, seed: u64) -> Result<RowMatrix> {
    RandomNoisy {
        n,
        d,
        m,
        zeta,
        decay: Decay::Signal,
    }
    .generate(seed)
}

/// Entry distribution of the adversarial phase vectors before normalising.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entries {
    /// Uniform on `[0, 1)`: every vector leans toward the block's diagonal.
    #[default]
    Uniform,
    Gaussian,
}

/// Unit rows drawn from an m₁-dimensional block, followed by unit rows from a
/// disjoint m₂-dimensional block. A sketch that forgets small directions during
/// the first phase has nothing left for the second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adversarial {
    pub n: usize,
    pub d: usize,
    pub m1: usize,
    pub m2: usize,
    /// Fraction of rows in the first phase.
    pub split: f64,
    #[serde(default)]
    pub entries: Entries,
    /// Apply one random rotation to all rows so they are not axis-aligned.
    #[serde(default)]
    pub rotate: bool,
}

impl Default for Adversarial {
    fn default() -> Self {
        Adversarial {
            n: 10_000,
            d: 500,
            m1: 400,
            m2: 4,
            split: 0.8,
            entries: Entries::Uniform,
            rotate: false,
        }
    }
}

impl Adversarial {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.m1 == 0 || self.m2 == 0 {
            return Err(SketchError::invalid("adversarial needs n, d, m1, m2 >= 1"));
        }
        if self.m1 + self.m2 > self.d {
            return Err(SketchError::invalid(format!(
                "adversarial needs m1 + m2 <= d ({} + {} > {})",
                self.m1, self.m2, self.d
            )));
        }
        if !(0.0..=1.0).contains(&self.split) {
            return Err(SketchError::invalid(format!("split must lie in [0, 1], got {}", self.split)));
        }
        Ok(())
    }

    /// Rows in the first phase.
    pub fn phase_one_rows(&self) -> usize {
        ((self.split * self.n as f64).round() as usize).min(self.n)
    }

    pub fn generate(&self, seed: u64) -> Result<RowMatrix> {
        self.validate()?;
        let n1 = self.phase_one_rows();
        let mut rng = rng_from_seed(sub_seed(seed, "adversarial/rows"));
        let mut a = Array2::zeros((self.n, self.d));
        for (i, mut row) in a.rows_mut().into_iter().enumerate() {
            let (lo, width) = if i < n1 { (0, self.m1) } else { (self.m1, self.m2) };
            let block = row.slice_mut(ndarray::s![lo..lo + width]).into_slice().expect("contiguous");
            loop {
                for x in block.iter_mut() {
                    *x = match self.entries {
                        Entries::Uniform => rng.random::<f64>(),
                        Entries::Gaussian => StandardNormal.sample(&mut rng),
                    };
                }
                let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    block.iter_mut().for_each(|x| *x /= norm);
                    break;
                }
            }
        }
        if self.rotate {
            let mut rng = rng_from_seed(sub_seed(seed, "adversarial/rotation"));
            let q = random_row_orthonormal(self.d, self.d, &mut rng);
            a = a.dot(&q);
        }
        Ok(RowMatrix::from_dense(a))
    }
}

pub fn gen_adversarial(n: usize, d: usize, m1: usize, m2: usize, seed: u64) -> Result<RowMatrix> {
    Adversarial {
        n,
        d,
        m1,
        m2,
        ..Adversarial::default()
    }
    .generate(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    /// Comma-separated values, one row per line, no header.
    DenseCsv,
    /// MatrixMarket coordinate format with 1-based indices.
    MatrixMarket,
}

impl MatrixFormat {
    /// `.mtx` is MatrixMarket; anything else is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("mtx") => MatrixFormat::MatrixMarket,
            _ => MatrixFormat::DenseCsv,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SketchError {
    SketchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> SketchError {
    SketchError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<RowMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    match format {
        MatrixFormat::DenseCsv => read_csv(path, reader),
        MatrixFormat::MatrixMarket => read_mtx(path, reader),
    }
}

fn read_csv(path: &Path, reader: impl BufRead) -> Result<RowMatrix> {
    let mut data = Vec::new();
    let mut width = None;
    let mut n = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("not a number: {:?}", field.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, "non-finite value"));
            }
            data.push(v);
        }
        let w = data.len() - start;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected {expected} columns, found {w}"),
                ))
            }
            _ => {}
        }
        n += 1;
    }
    let d = width.unwrap_or(0);
    let a = Array2::from_shape_vec((n, d), data).expect("row widths checked");
    Ok(RowMatrix::from_dense(a))
}

fn read_mtx(path: &Path, reader: impl BufRead) -> Result<RowMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header.map_err(|e| io_err(path, e))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, "missing %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(path, 1, format!("unsupported layout {:?}", tokens[2])));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(parse_err(path, 1, format!("unsupported field {other:?}"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry {other:?}"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut seen = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((n, d, _)) = size else {
            if fields.len() != 3 {
                return Err(parse_err(path, lineno, "expected size line `rows cols entries`"));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| parse_err(path, lineno, format!("bad size field {s:?}")))
            };
            let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            rows = vec![Vec::new(); dims.0];
            size = Some(dims);
            continue;
        };
        let want = if pattern { 2 } else { 3 };
        if fields.len() != want {
            return Err(parse_err(path, lineno, format!("expected {want} fields, found {}", fields.len())));
        }
        let index = |s: &str, bound: usize| -> Result<usize> {
            let i: usize = s
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad index {s:?}")))?;
            if i == 0 || i > bound {
                return Err(parse_err(path, lineno, format!("index {i} outside 1..={bound}")));
            }
            Ok(i - 1)
        };
        let i = index(fields[0], n)?;
        let j = index(fields[1], d)?;
        let v = if pattern {
            1.0
        } else {
            let v: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("not a number: {:?}", fields[2])))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, "non-finite value"));
            }
            v
        };
        rows[i].push((j, v));
        if symmetric && i != j {
            if j >= n || i >= d {
                return Err(parse_err(path, lineno, "symmetric entry outside a square matrix"));
            }
            rows[j].push((i, v));
        }
        seen += 1;
    }
    let (_, d, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            path,
            0,
            format!("size line promises {nnz} entries, found {seen}"),
        ));
    }
    // Sort and merge duplicate coordinates by summing.
    for row in &mut rows {
        row.sort_by_key(|&(j, _)| j);
        row.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
    }
    RowMatrix::from_sparse_rows(d, &rows)
}

pub fn save_csv(a: &RowMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf = vec![0.0; a.n_cols()];
    for r in a.rows() {
        r.write_scaled(&mut buf, 1.0);
        let line: Vec<String> = buf.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn save_matrix_market(a: &RowMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut entries = Vec::new();
    let mut buf = vec![0.0; a.n_cols()];
    for (i, r) in a.rows().enumerate() {
        r.write_scaled(&mut buf, 1.0);
        for (j, v) in buf.iter().enumerate() {
            if *v != 0.0 {
                entries.push((i + 1, j + 1, *v));
            }
        }
    }
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), entries.len())?;
        for (i, j, v) in &entries {
            writeln!(w, "{i} {j} {v}")?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| io_err(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n: usize,
    pub d: usize,
    /// Singular values above `RANK_TOL · σ₁`.
    pub rank: usize,
    /// `‖A‖_F² / ‖A‖₂²`.
    pub numeric_rank: f64,
    /// Percentage of nonzero entries.
    pub nnz_pct: f64,
    /// Fisher (excess) kurtosis over all n·d entries; NaN when every entry is equal.
    pub excess_kurtosis: f64,
}

pub fn dataset_stats(a: &RowMatrix) -> Result<DatasetStats> {
    a.check_finite()?;
    let (n, d) = (a.n_rows(), a.n_cols());
    let fro = a.frobenius_sq();
    if fro <= 0.0 {
        return Err(SketchError::Undefined("statistics of a zero matrix"));
    }
    let spectrum = linalg::svd(a.dense().view())?;
    let top = spectrum.values[0];
    let rank = spectrum.values.iter().filter(|&&s| s > RANK_TOL * top).count();

    let count = (n * d) as f64;
    let mut sum = 0.0;
    for r in a.rows() {
        sum += match r {
            crate::matrix::RowView::Dense(v) => v.iter().sum::<f64>(),
            crate::matrix::RowView::Sparse { values, .. } => values.iter().sum(),
        };
    }
    let mean = sum / count;
    // Zero entries contribute (0 − mean)^p each.
    let zeros = count - a.nnz() as f64;
    let (mut m2, mut m4) = (zeros * mean.powi(2), zeros * mean.powi(4));
    let mut add = |x: f64| {
        let c = x - mean;
        let c2 = c * c;
        m2 += c2;
        m4 += c2 * c2;
    };
    for r in a.rows() {
        match r {
            crate::matrix::RowView::Dense(v) => v.iter().filter(|x| **x != 0.0).for_each(|x| add(*x)),
            crate::matrix::RowView::Sparse { values, .. } => {
                values.iter().filter(|x| **x != 0.0).for_each(|x| add(*x))
            }
        }
    }
    m2 /= count;
    m4 /= count;
    let excess_kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { f64::NAN };

    Ok(DatasetStats {
        n,
        d,
        rank,
        numeric_rank: fro / (top * top),
        nnz_pct: 100.0 * a.nnz() as f64 / count,
        excess_kurtosis,
    })
}

/// Subtracts each column's mean, returning a dense matrix.
pub fn center_columns(a: &RowMatrix) -> RowMatrix {
    let mut dense = a.dense().into_owned();
    if dense.nrows() == 0 {
        return RowMatrix::from_dense(dense);
    }
    let means = dense.mean_axis(ndarray::Axis(0)).expect("non-empty");
    dense -= &means;
    RowMatrix::from_dense(dense)
}
