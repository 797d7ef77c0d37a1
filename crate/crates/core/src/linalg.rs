//! Dense linear-algebra kernel shared by the sketches and the error metrics.
//!
//! Everything here is deterministic for a fixed input: the SVD is one-sided
//! (Hestenes) Jacobi, preceded by a Householder QR when the input has more rows
//! than columns, and symmetric eigenproblems use cyclic two-sided Jacobi.

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Result, SketchError};
use crate::matrix::RowMatrix;
use crate::rng::{splitmix64, unit_f64};

/// Singular values at or below this fraction of the largest are treated as zero.
pub const SINGULAR_CLAMP: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-15;

/// Largest matrix dimension for which `spectral_norm` uses a full eigendecomposition.
pub const DENSE_EIGEN_MAX_DIM: usize = 64;
const POWER_MAX_ITERS: usize = 1000;
const POWER_REL_TOL: f64 = 1e-10;

/// Ordered singular values with the matching right singular vectors as rows.
#[derive(Clone, Debug)]
pub struct SingularSpectrum {
    /// Non-increasing, non-negative.
    pub values: Vec<f64>,
    /// r x d, rows orthonormal.
    pub right_basis: Array2<f64>,
}

impl SingularSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of values above the clamp threshold.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `diag(values) · right_basis`.
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut out = self.right_basis.clone();
        for (mut row, &v) in out.rows_mut().into_iter().zip(&self.values) {
            row.mapv_inplace(|x| x * v);
        }
        out
    }
}

/// Full decomposition `M = U · diag(values) · right_basis`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// m x r, orthonormal columns.
    pub left: Array2<f64>,
    pub spectrum: SingularSpectrum,
}

/// Projection onto the span of k orthonormal rows.
#[derive(Clone, Debug)]
pub struct RankKProjection {
    basis: Array2<f64>,
}

impl RankKProjection {
    /// Wraps a k x d row-orthonormal basis; rejects bases off by more than 1e-8.
    pub fn new(basis: Array2<f64>) -> Result<Self> {
        if basis.nrows() > basis.ncols() {
            return Err(SketchError::invalid(format!(
                "projection rank {} exceeds dimension {}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let err = orthonormality_error(basis.view());
        if err > 1e-8 {
            return Err(SketchError::invalid(format!(
                "basis rows are not orthonormal (max deviation {err:e})"
            )));
        }
        Ok(RankKProjection { basis })
    }

    /// Top-k right singular vectors of a spectrum. Uses every nonzero direction
    /// when fewer than k exist; the bool reports that shortfall.
    pub fn top_k(spectrum: &SingularSpectrum, k: usize) -> (Self, bool) {
        let rank = spectrum.rank();
        let take = k.min(rank);
        let basis = spectrum.right_basis.slice(s![..take, ..]).to_owned();
        (RankKProjection { basis }, take < k)
    }

    pub fn k(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> ArrayView2<'_, f64> {
        self.basis.view()
    }
}

/// Symmetric eigendecomposition; `vectors` holds eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Non-increasing.
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

fn check_finite_view(m: ArrayView2<'_, f64>) -> Result<()> {
    for ((i, j), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(SketchError::NonFinite { row: i, col: j });
        }
    }
    Ok(())
}

/// Largest |(VVᵀ - I)_ij| over a row basis V.
pub fn orthonormality_error(basis: ArrayView2<'_, f64>) -> f64 {
    let g = basis.dot(&basis.t());
    let mut worst = 0.0f64;
    for ((i, j), v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}

/// Thin SVD of an m x d matrix. Returns `min(m, d)` values.
pub fn svd(m: ArrayView2<'_, f64>) -> Result<SingularSpectrum> {
    Ok(svd_impl(m, false)?.spectrum)
}

/// Thin SVD including the left factor.
pub fn svd_full(m: ArrayView2<'_, f64>) -> Result<Svd> {
    svd_impl(m, true)
}

fn svd_impl(m: ArrayView2<'_, f64>, want_left: bool) -> Result<Svd> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(SketchError::invalid("svd of an empty matrix"));
    }
    check_finite_view(m)?;

    if rows > cols {
        // Tall: M = QR, then decompose the square factor R.
        let (q, r) = householder_qr(m, want_left);
        let inner = svd_impl(r.view(), want_left)?;
        let left = match q {
            Some(q) => q.dot(&inner.left),
            None => Array2::zeros((0, 0)),
        };
        return Ok(Svd {
            left,
            spectrum: inner.spectrum,
        });
    }

    let mut w = m.as_standard_layout().into_owned();
    let mut acc = want_left.then(|| Array2::<f64>::eye(rows));
    {
        let w_flat = w.as_slice_mut().expect("standard layout");
        let acc_flat = acc.as_mut().map(|a| a.as_slice_mut().expect("standard layout"));
        hestenes_rows(w_flat, rows, cols, acc_flat);
    }

    let norms: Vec<f64> = w
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let top = norms[order[0]];
    let mut values = Vec::with_capacity(rows);
    let mut basis = Array2::zeros((rows, cols));
    let mut pending = Vec::new();
    for (slot, &i) in order.iter().enumerate() {
        let sigma = norms[i];
        if sigma > 0.0 && sigma > SINGULAR_CLAMP * top {
            values.push(sigma);
            basis
                .row_mut(slot)
                .assign(&w.row(i).mapv(|x| x / sigma));
        } else {
            values.push(0.0);
            pending.push(slot);
        }
    }
    complete_basis(&mut basis, &pending);

    let left = match acc {
        Some(acc) => {
            // W_final = J · M  =>  M = Jᵀ · Σ · V, so column k of U is row order[k] of J.
            let mut u = Array2::zeros((rows, rows));
            for (slot, &i) in order.iter().enumerate() {
                u.column_mut(slot).assign(&acc.row(i));
            }
            u
        }
        None => Array2::zeros((0, 0)),
    };

    Ok(Svd {
        left,
        spectrum: SingularSpectrum {
            values,
            right_basis: basis,
        },
    })
}

/// One-sided Jacobi on the rows of a `rows x cols` row-major matrix until all
/// row pairs are orthogonal. Rotations are mirrored onto `acc` when given.
fn hestenes_rows(w: &mut [f64], rows: usize, cols: usize, mut acc: Option<&mut [f64]>) {
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..rows {
            for q in (p + 1)..rows {
                let (head, tail) = w.split_at_mut(q * cols);
                let wp = &mut head[p * cols..(p + 1) * cols];
                let wq = &mut tail[..cols];
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (x, y) in wp.iter().zip(wq.iter()) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum_or_one() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate_pair(wp, wq, c, sn);
                if let Some(acc) = acc.as_deref_mut() {
                    let (head, tail) = acc.split_at_mut(q * rows);
                    rotate_pair(&mut head[p * rows..(p + 1) * rows], &mut tail[..rows], c, sn);
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

#[inline]
fn rotate_pair(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xv, yv) = (*x, *y);
        *x = c * xv - s * yv;
        *y = s * xv + c * yv;
    }
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    #[inline]
    fn signum_or_one(self) -> f64 {
        if self >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Fills rows `pending` of `basis` with unit vectors orthogonal to every other
/// row, each taken as the best-conditioned coordinate axis after Gram-Schmidt.
fn complete_basis(basis: &mut Array2<f64>, pending: &[usize]) {
    if pending.is_empty() {
        return;
    }
    let mut accepted: Vec<Vec<f64>> = (0..basis.nrows())
        .filter(|i| !pending.contains(i))
        .map(|i| basis.row(i).to_vec())
        .collect();
    for &slot in pending {
        match axis_completion(&accepted, basis.ncols()) {
            Some(v) => {
                basis.row_mut(slot).assign(&ndarray::ArrayView1::from(&v));
                accepted.push(v);
            }
            // Only reachable when the rows outnumber the dimension.
            None => basis.row_mut(slot).fill(0.0),
        }
    }
}

/// The coordinate axis with the largest component orthogonal to `ortho`
/// (assumed orthonormal), normalised. `None` if `ortho` spans the space.
fn axis_completion(ortho: &[Vec<f64>], d: usize) -> Option<Vec<f64>> {
    // For an orthonormal set, ‖e_i − P e_i‖² = 1 − Σ_b b_i², so the best axis
    // is found without projecting each one.
    let mut captured = vec![0.0; d];
    for b in ortho {
        captured.iter_mut().zip(b).for_each(|(c, x)| *c += x * x);
    }
    let axis = (0..d).min_by(|&i, &j| captured[i].total_cmp(&captured[j]).then(i.cmp(&j)))?;
    let mut v = vec![0.0; d];
    v[axis] = 1.0;
    for _ in 0..2 {
        for b in ortho {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1e-8 {
        v.iter_mut().for_each(|x| *x /= n);
        Some(v)
    } else {
        None
    }
}

/// Householder QR of a tall matrix. Returns the thin Q (m x d) when asked, and
/// the upper-triangular d x d factor R.
pub fn householder_qr(a: ArrayView2<'_, f64>, want_q: bool) -> (Option<Array2<f64>>, Array2<f64>) {
    let (m, n) = a.dim();
    assert!(m >= n, "householder_qr expects rows >= cols");
    // Column-major working copy: column j is cols[j*m .. (j+1)*m].
    let mut cols = vec![0.0; m * n];
    for j in 0..n {
        for i in 0..m {
            cols[j * m + i] = a[[i, j]];
        }
    }
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
    for j in 0..n {
        let x = &cols[j * m + j..(j + 1) * m];
        let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm_x } else { norm_x };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|t| t * t).sum();
        if vnorm_sq == 0.0 {
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let beta = 2.0 / vnorm_sq;
        for k in j..n {
            let col = &mut cols[k * m + j..(k + 1) * m];
            let dot: f64 = v.iter().zip(col.iter()).map(|(p, q)| p * q).sum();
            let f = beta * dot;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        reflectors.push((v, beta));
    }
    let mut r = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..=j {
            r[[i, j]] = cols[j * m + i];
        }
    }
    let q = want_q.then(|| {
        // Apply H_1 ... H_n to the first n columns of the identity, in reverse.
        let mut qc = vec![0.0; m * n];
        for j in 0..n {
            qc[j * m + j] = 1.0;
        }
        for j in (0..n).rev() {
            let (v, beta) = &reflectors[j];
            if v.is_empty() {
                continue;
            }
            for k in 0..n {
                let col = &mut qc[k * m + j..(k + 1) * m];
                let dot: f64 = v.iter().zip(col.iter()).map(|(p, q)| p * q).sum();
                let f = beta * dot;
                for (c, vi) in col.iter_mut().zip(v) {
                    *c -= f * vi;
                }
            }
        }
        let mut q = Array2::zeros((m, n));
        for j in 0..n {
            for i in 0..m {
                q[[i, j]] = qc[j * m + i];
            }
        }
        q
    });
    (q, r)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eigen(m: ArrayView2<'_, f64>) -> Result<SymEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SketchError::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    check_finite_view(m)?;
    check_symmetric(m, 1e-10)?;
    let mut a = m.as_standard_layout().into_owned();
    // Symmetrise exactly so rotations keep the stored triangle consistent.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = avg;
            a[[j, i]] = avg;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    jacobi_eigen_in_place(
        a.as_slice_mut().expect("standard layout"),
        v.as_slice_mut().expect("standard layout"),
        n,
    );
    let diag: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (slot, &i) in order.iter().enumerate() {
        vectors.column_mut(slot).assign(&v.column(i));
    }
    Ok(SymEigen { values, vectors })
}

/// Rotates `a` (n x n, row-major, symmetric) to diagonal form; rotations are
/// accumulated into the columns of `v`.
fn jacobi_eigen_in_place(a: &mut [f64], v: &mut [f64], n: usize) {
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if fro == 0.0 {
        return;
    }
    let abs_floor = 1e-18 * fro;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                if apq.abs() <= abs_floor || apq.abs() <= JACOBI_TOL * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum_or_one() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Eigendecomposition of the symmetric arrowhead matrix
/// `[[diag(d), z], [zᵀ, alpha]]` in `O(n²)`.
///
/// Small `z_j` and (nearly) equal `d_j` are deflated first; the remaining
/// eigenvalues are roots of the secular equation
/// `λ − alpha − Σ z_j² / (λ − d_j) = 0`, one per interlacing interval, solved
/// relative to the nearer pole. Eigenvectors use `z` recomputed from
/// the roots (Löwner's formula), which keeps them numerically orthogonal.
pub fn arrowhead_eigen(d: &[f64], z: &[f64], alpha: f64) -> SymEigen {
    let m = d.len();
    assert_eq!(z.len(), m, "arrowhead needs one coupling per diagonal entry");
    let n = m + 1;
    let znorm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = d.iter().fold(alpha.abs().max(znorm), |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return SymEigen {
            values: vec![0.0; n],
            vectors: Array2::eye(n),
        };
    }
    let tol = 8.0 * f64::EPSILON * scale;

    // Basis for the first m coordinates as sparse columns: the identity until a
    // deflation rotation mixes two of them.
    let mut basis: Vec<Vec<(usize, f64)>> = (0..m).map(|j| vec![(j, 1.0)]).collect();
    let mut zz = z.to_vec();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::with_capacity(m);
    let mut deflated: Vec<usize> = Vec::new();
    for &j in &order {
        if zz[j].abs() <= tol {
            deflated.push(j);
            continue;
        }
        if let Some(&k) = active.last() {
            if d[j] - d[k] <= tol {
                // Rotate the coupling of j onto k; j decouples with value ≈ d[j].
                let r = zz[k].hypot(zz[j]);
                let (c, s) = (zz[k] / r, zz[j] / r);
                let (bk, bj) = (std::mem::take(&mut basis[k]), std::mem::take(&mut basis[j]));
                basis[k] = combine(&bk, c, &bj, s);
                basis[j] = combine(&bk, -s, &bj, c);
                zz[k] = r;
                zz[j] = 0.0;
                deflated.push(j);
                continue;
            }
        }
        active.push(j);
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for &j in &deflated {
        let mut v = vec![0.0; n];
        for &(row, b) in &basis[j] {
            v[row] = b;
        }
        pairs.push((d[j], v));
    }

    let p = active.len();
    let dv: Vec<f64> = active.iter().map(|&j| d[j]).collect();
    let zv: Vec<f64> = active.iter().map(|&j| zz[j]).collect();
    let zsq: Vec<f64> = zv.iter().map(|x| x * x).collect();
    if p == 0 {
        let mut v = vec![0.0; n];
        v[m] = 1.0;
        pairs.push((alpha, v));
    } else {
        let g = |o: usize, mu: f64| -> f64 {
            let mut acc = (dv[o] - alpha) + mu;
            for t in 0..p {
                acc -= zsq[t] / ((dv[o] - dv[t]) + mu);
            }
            acc
        };
        // Roots are found relative to a pole o, λ = dv[o] + mu. Near the pole
        // the secular function is `ψ(mu) − z_o²/mu` with ψ smooth and
        // increasing; each step solves that model with ψ linearised, which
        // captures the pole exactly. Steps leaving the bracket fall back to
        // bisection.
        let solve = |o: usize, mut lo: f64, mut hi: f64| -> f64 {
            let mut x = 0.5 * (lo + hi);
            for _ in 0..100 {
                let (mut psi, mut dpsi) = ((dv[o] - alpha) + x, 1.0);
                for t in 0..p {
                    if t != o {
                        let inv = 1.0 / ((dv[o] - dv[t]) + x);
                        psi -= zsq[t] * inv;
                        dpsi += zsq[t] * inv * inv;
                    }
                }
                let gx = psi - zsq[o] / x;
                if gx == 0.0 {
                    return x;
                }
                if gx < 0.0 {
                    lo = x;
                } else {
                    hi = x;
                }
                let b = psi - dpsi * x;
                let disc = (b * b + 4.0 * dpsi * zsq[o]).sqrt();
                let q = -0.5 * (b + disc.copysign(b));
                let (r1, r2) = (q / dpsi, -zsq[o] / q);
                let want_positive = hi > 0.0;
                let mut next = if (r1 > 0.0) == want_positive { r1 } else { r2 };
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - x).abs() <= 2.0 * f64::EPSILON * next.abs() || next <= lo || next >= hi {
                    return next;
                }
                x = next;
            }
            x
        };
        // roots[r] = (origin pole, offset): λ_r = dv[origin] + offset.
        let mut roots: Vec<(usize, f64)> = Vec::with_capacity(p + 1);
        let reach = znorm + tol;
        let low = alpha.min(dv[0]) - reach - dv[0];
        roots.push((0, solve(0, low, 0.0)));
        for r in 1..p {
            let gap = dv[r] - dv[r - 1];
            if g(r - 1, 0.5 * gap) >= 0.0 {
                roots.push((r - 1, solve(r - 1, 0.0, 0.5 * gap)));
            } else {
                roots.push((r, solve(r, -0.5 * gap, 0.0)));
            }
        }
        let high = alpha.max(dv[p - 1]) + reach - dv[p - 1];
        roots.push((p - 1, solve(p - 1, 0.0, high)));

        // λ_r − dv[q], computed without cancellation.
        let diff = |r: usize, q: usize| (dv[roots[r].0] - dv[q]) + roots[r].1;
        let zhat: Vec<f64> = (0..p)
            .map(|q| {
                let mut acc = -diff(q, q) * diff(q + 1, q);
                for t in 0..q {
                    acc *= diff(t, q) / (dv[t] - dv[q]);
                }
                for t in q + 1..p {
                    acc *= diff(t + 1, q) / (dv[t] - dv[q]);
                }
                acc.max(0.0).sqrt().copysign(zv[q])
            })
            .collect();
        for r in 0..=p {
            let coef: Vec<f64> = (0..p).map(|q| zhat[q] / diff(r, q)).collect();
            let norm = (1.0 + coef.iter().map(|x| x * x).sum::<f64>()).sqrt();
            let mut v = vec![0.0; n];
            for (q, &j) in active.iter().enumerate() {
                let c = coef[q] / norm;
                for &(row, b) in &basis[j] {
                    v[row] += c * b;
                }
            }
            v[m] = 1.0 / norm;
            pairs.push((dv[roots[r].0] + roots[r].1, v));
        }
    }

    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let vectors = Array2::from_shape_fn((n, n), |(row, slot)| pairs[slot].1[row]);
    let values = pairs.iter().map(|p| p.0).collect();
    SymEigen { values, vectors }
}

/// `a·x + b·y` for sparse vectors given as (index, value) lists.
fn combine(x: &[(usize, f64)], a: f64, y: &[(usize, f64)], b: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = x.iter().map(|&(i, v)| (i, a * v)).collect();
    for &(i, v) in y {
        match out.iter_mut().find(|e| e.0 == i) {
            Some(e) => e.1 += b * v,
            None => out.push((i, b * v)),
        }
    }
    out
}

fn check_symmetric(m: ArrayView2<'_, f64>, tol: f64) -> Result<()> {
    let n = m.nrows();
    let scale = m.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            let gap = (m[[i, j]] - m[[j, i]]).abs();
            if gap > tol * scale {
                return Err(SketchError::NotSymmetric { i, j, gap });
            }
        }
    }
    Ok(())
}

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// Matrices up to [`DENSE_EIGEN_MAX_DIM`] are decomposed fully; larger ones go
/// through [`power_iteration_norm`].
pub fn spectral_norm(m: ArrayView2<'_, f64>) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(SketchError::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    check_finite_view(m)?;
    check_symmetric(m, 1e-10)?;
    if n == 0 {
        return Ok(0.0);
    }
    if n <= DENSE_EIGEN_MAX_DIM {
        let eig = sym_eigen(m)?;
        return Ok(eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    }
    Ok(power_iteration_norm(m))
}

/// Power iteration for `max |λ|` of a symmetric matrix.
///
/// Each step maps `x -> Mx/‖Mx‖` and the estimate is `‖Mx‖` for unit `x`, the
/// square root of the Rayleigh quotient of `M²`. That estimate is monotone and
/// converges to `max |λ|` even when `λ` and `-λ` are both eigenvalues. Stops
/// once successive estimates agree to 1e-10 relative, or after 1000 steps.
pub fn power_iteration_norm(m: ArrayView2<'_, f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut state = 0x5eed_u64;
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state = splitmix64(state);
            1.0 + 1e-2 * (unit_f64(state) - 0.5)
        })
        .collect();
    normalize(&mut x);
    let m = m.as_standard_layout();
    let flat = m.as_slice().expect("standard layout");
    let mut y = vec![0.0; n];
    let mut prev = 0.0f64;
    for _ in 0..POWER_MAX_ITERS {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = flat[i * n..(i + 1) * n]
                .iter()
                .zip(&x)
                .map(|(a, b)| a * b)
                .sum();
        }
        let est = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if est == 0.0 {
            return 0.0;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / est;
        }
        if (est - prev).abs() <= POWER_REL_TOL * est {
            return est;
        }
        prev = est;
    }
    prev
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// `‖A − A_k‖_F²`, the squared tail of the singular spectrum past index k.
pub fn rank_k_residual_sq(a: &RowMatrix, k: usize) -> Result<f64> {
    let limit = a.n_rows().min(a.n_cols());
    if k > limit {
        return Err(SketchError::invalid(format!(
            "k = {k} exceeds min(n, d) = {limit}"
        )));
    }
    let spec = svd(a.dense().view())?;
    Ok(spec.values[k..].iter().map(|v| v * v).sum())
}

/// `A · Pᵀ · P` for a row-orthonormal basis P.
pub fn project_onto(a: &RowMatrix, p: &RankKProjection) -> Result<RowMatrix> {
    if p.dim() != a.n_cols() {
        return Err(SketchError::DimensionMismatch {
            expected: a.n_cols(),
            found: p.dim(),
        });
    }
    let dense = a.dense();
    let coeffs = dense.dot(&p.basis.t());
    Ok(RowMatrix::from_dense(coeffs.dot(&p.basis)))
}

/// `Σ_i ‖a_i − a_i Pᵀ P‖²`, computed row by row for accuracy when the
/// residual is small relative to `‖A‖_F²`.
pub fn projection_residual_sq(a: &RowMatrix, p: &RankKProjection) -> f64 {
    let basis = p.basis();
    let k = basis.nrows();
    let mut coeff = vec![0.0; k];
    let mut total = 0.0;
    for row in a.rows() {
        let mut r = row.to_vec();
        for (j, c) in coeff.iter_mut().enumerate() {
            *c = row.dot(basis.row(j).as_slice().expect("standard layout"));
        }
        for (j, c) in coeff.iter().enumerate() {
            for (rk, bk) in r.iter_mut().zip(basis.row(j).iter()) {
                *rk -= c * bk;
            }
        }
        total += r.iter().map(|x| x * x).sum::<f64>();
    }
    total
}

/// Rotates the first `rows` rows of a row-major `buf` (row length `d`) onto the
/// right singular basis: afterwards row j is `σ_j v_jᵀ` with rows ordered by
/// decreasing norm. Returns the squared row norms.
///
/// Works through the `rows x rows` Gram matrix so the cost is `O(rows² d)` per
/// call; the applied map is orthogonal, so Frobenius mass is preserved up to
/// rounding.
pub(crate) fn rotate_rows_to_spectrum(buf: &mut Array2<f64>, rows: usize) -> Vec<f64> {
    let block = buf.slice(s![..rows, ..]).to_owned();
    let mut g = block.dot(&block.t());
    let mut v = Array2::<f64>::eye(rows);
    jacobi_eigen_in_place(
        g.as_slice_mut().expect("standard layout"),
        v.as_slice_mut().expect("standard layout"),
        rows,
    );
    let rotated = v.t().dot(&block);
    let norms: Vec<f64> = rotated
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    for (slot, &i) in order.iter().enumerate() {
        buf.row_mut(slot).assign(&rotated.row(i));
    }
    order.iter().map(|&i| norms[i]).collect()
}

/// As [`rotate_rows_to_spectrum`] for a buffer whose first `rows − 1` rows are
/// mutually orthogonal and whose last row is arbitrary: the Gram matrix is then
/// an arrowhead, so the eigensolve costs `O(rows²)` instead of `O(rows³)`.
pub(crate) fn rotate_arrowhead_to_spectrum(buf: &mut Array2<f64>, rows: usize) -> Vec<f64> {
    let m = rows - 1;
    let block = buf.slice(s![..rows, ..]).to_owned();
    let w = block.row(m);
    let diag: Vec<f64> = (0..m).map(|j| block.row(j).dot(&block.row(j))).collect();
    let z: Vec<f64> = (0..m).map(|j| block.row(j).dot(&w)).collect();
    let eig = arrowhead_eigen(&diag, &z, w.dot(&w));
    let rotated = eig.vectors.t().dot(&block);
    let norms: Vec<f64> = rotated
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    for (slot, &i) in order.iter().enumerate() {
        buf.row_mut(slot).assign(&rotated.row(i));
    }
    order.iter().map(|&i| norms[i]).collect()
}

/// A deterministic unit vector orthogonal to every nonzero row of `rows`, or
/// `None` when those rows already span the whole space.
pub(crate) fn unit_orthogonal_to(rows: ArrayView2<'_, f64>) -> Option<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for r in rows.rows() {
        let scale = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut v = r.to_vec();
        for _ in 0..2 {
            for b in &ortho {
                let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-10 * scale {
            v.iter_mut().for_each(|x| *x /= n);
            ortho.push(v);
        }
    }
    axis_completion(&ortho, rows.ncols())
}
