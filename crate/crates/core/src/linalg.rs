//! Small dense `f64` kernels: matrix products and a symmetric eigensolver.
//!
//! Matrices are row-major slices. The eigensolver reduces a symmetric matrix
//! to tridiagonal form with Householder reflections and then runs implicit
//! QL iterations with Wilkinson shifts. It can either accumulate the
//! eigenvectors or only carry a set of right-hand sides along, which is all
//! LogME needs and costs `O(n^2)` per vector instead of `O(n^3)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Strided read-only view of a dense matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a> MatRef<'a> {
    pub fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major view: length does not match shape");
        Self { data, rows, cols, row_stride: cols, col_stride: 1 }
    }

    /// The transposed view; no data is moved.
    pub fn t(self) -> Self {
        Self { data: self.data, rows: self.cols, cols: self.rows, row_stride: self.col_stride, col_stride: self.row_stride }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.row_stride + j * self.col_stride]
    }
}

/// `a * b` as a new row-major `a.rows x b.cols` matrix.
pub fn matmul(a: MatRef<'_>, b: MatRef<'_>) -> Vec<f64> {
    assert_eq!(a.cols, b.rows, "matmul: inner dimensions differ");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: both views were constructed over slices covering their full
    // shape (checked in `row_major`, preserved by `t`), and `c` is a fresh
    // m x n row-major buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

/// `fᵀ f` for a row-major `rows x cols` matrix.
pub fn gram(f: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let view = MatRef::row_major(f, rows, cols);
    matmul(view.t(), view)
}

/// `f fᵀ` for a row-major `rows x cols` matrix.
pub fn outer_gram(f: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let view = MatRef::row_major(f, rows, cols);
    matmul(view, view.t())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Row `i` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<f64>,
    pub dim: usize,
}

impl SymmetricEigen {
    /// Decomposes the symmetric `n x n` row-major matrix `a`. Only the lower
    /// triangle is read.
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        let mut vt = vec![0.0; n * n];
        for i in 0..n {
            vt[i * n + i] = 1.0;
        }
        let values = eigen_apply(a.to_vec(), n, &mut vt, n)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
        let mut sorted_values = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * n);
        for &i in &order {
            sorted_values.push(values[i]);
            vectors.extend_from_slice(&vt[i * n..(i + 1) * n]);
        }
        Ok(Self { values: sorted_values, vectors, dim: n })
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }
}

/// Eigenvalues of the symmetric `n x n` matrix `a` together with `Vᵀ b`,
/// where the columns of `V` are the matching unit eigenvectors and `b` is a
/// row-major `n x width` block (overwritten in place). Eigenvalues come back
/// in no particular order; row `i` of `b` pairs with eigenvalue `i`.
pub fn eigen_apply(mut a: Vec<f64>, n: usize, b: &mut [f64], width: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n, "eigen_apply: matrix is not n x n");
    assert_eq!(b.len(), n * width, "eigen_apply: right-hand side is not n x width");
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut diag, mut off, reflectors) = tridiagonalize(&mut a, n);
    drop(a);
    apply_reflectors(&reflectors, b, width);
    tridiagonal_ql(&mut diag, &mut off, b, width)?;
    Ok(diag)
}

struct Reflector {
    /// First component the reflector acts on.
    start: usize,
    tau: f64,
    /// Householder vector with implicit leading one stored explicitly.
    v: Vec<f64>,
}

/// Reduces the lower triangle of `a` to `Qᵀ a Q = T`. Returns the diagonal,
/// the sub-diagonal (padded with a trailing zero to length `n`) and the
/// reflectors whose product `H_0 H_1 ⋯` is `Q`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<Reflector>) {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k];
        let o = k + 1;
        let m = n - o;
        let alpha = a[o * n + k];
        let tail: f64 = (o + 1..n).map(|i| a[i * n + k] * a[i * n + k]).sum();
        if tail == 0.0 {
            off[k] = alpha;
            continue;
        }
        let norm = libm::sqrt(alpha * alpha + tail);
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        let mut v = Vec::with_capacity(m);
        v.push(1.0);
        v.extend((o + 1..n).map(|i| a[i * n + k] * scale));
        off[k] = beta;

        // p = tau * A22 v over the lower triangle of the trailing block.
        let p = &mut p[..m];
        p.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..m {
            let row = &a[(o + i) * n + o..(o + i) * n + o + i + 1];
            let (below, d) = row.split_at(i);
            let vi = v[i];
            let s = dot(below, &v[..i]);
            axpy(vi, below, &mut p[..i]);
            p[i] += s + d[0] * vi;
        }
        p.iter_mut().for_each(|x| *x *= tau);
        let kk = 0.5 * tau * dot(p, &v);
        // w = p - kk v, stored in p
        axpy(-kk, &v, p);
        for i in 0..m {
            let row = &mut a[(o + i) * n + o..(o + i) * n + o + i + 1];
            let (vi, wi) = (v[i], p[i]);
            for ((x, &vj), &wj) in row.iter_mut().zip(&v[..=i]).zip(&p[..=i]) {
                *x -= vi * wj + wi * vj;
            }
        }
        reflectors.push(Reflector { start: o, tau, v });
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        off[n - 2] = a[(n - 1) * n + n - 2];
    }
    diag[n - 1] = a[(n - 1) * n + n - 1];
    (diag, off, reflectors)
}

/// `b <- Qᵀ b = ⋯ H_1 H_0 b`.
fn apply_reflectors(reflectors: &[Reflector], b: &mut [f64], width: usize) {
    let mut s = vec![0.0; width];
    for r in reflectors {
        s.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in r.v.iter().enumerate() {
            let row = &b[(r.start + i) * width..(r.start + i + 1) * width];
            axpy(vi, row, &mut s);
        }
        for (i, &vi) in r.v.iter().enumerate() {
            let row = &mut b[(r.start + i) * width..(r.start + i + 1) * width];
            axpy(-r.tau * vi, &s, row);
        }
    }
}

/// Implicit QL with Wilkinson shifts on the symmetric tridiagonal matrix
/// (`diag`, `off`), where `off[i]` couples `i` and `i + 1`. Every plane
/// rotation is also applied to rows `i`, `i + 1` of `b`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], b: &mut [f64], width: usize) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut shift_total = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n - 1 && libm::fabs(e[m]) > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift_total += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(b, width, i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(b: &mut [f64], width: usize, i: usize, c: f64, s: f64) {
    if width == 0 {
        return;
    }
    let (upper, lower) = b.split_at_mut((i + 1) * width);
    let ri = &mut upper[i * width..];
    let rj = &mut lower[..width];
    for (x, y) in ri.iter_mut().zip(rj.iter_mut()) {
        let h = *y;
        *y = s * *x + c * h;
        *x = c * *x - s * h;
    }
}
