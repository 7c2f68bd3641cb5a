//! Small dense linear algebra: a row-major matrix type, a cyclic Jacobi
//! eigensolver for symmetric matrices and an SVD built on top of it.
//!
//! Sizes in this crate stay below a few hundred, so nothing here is blocked
//! or vectorized.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{FlatError, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Mat::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v` without forming the transpose.
    pub fn tmatvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tmatvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Frobenius inner product.
    pub fn frob_dot(&self, other: &Mat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, a| m.max(a.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry of `|self - selfᵀ|`; `None` if not square.
    pub fn asymmetry(&self) -> Option<f64> {
        if self.rows != self.cols {
            return None;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Mat {
        assert_eq!(self.rows, self.cols);
        self.add(&self.transpose()).scale(0.5)
    }

    /// Copies rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        let mut out = Mat::zeros(r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                out[(i - r0, j - c0)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Spectral norm (largest singular value).
    pub fn spectral_norm(&self) -> f64 {
        svd(self).sigma.first().copied().unwrap_or(0.0)
    }

    /// Nuclear norm (sum of singular values).
    pub fn nuclear_norm(&self) -> f64 {
        svd(self).sigma.iter().sum()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Returns `a/|a|`, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scaled(a, 1.0 / n))
}

/// Symmetric eigendecomposition, eigenvalues sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Mat,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius mass drops below
/// `1e-13·‖S‖_F`. Rejects inputs whose asymmetry exceeds `1e-10·(1+‖S‖_max)`.
pub fn jacobi_symmetric_eigen(s: &Mat) -> Result<SymEigen> {
    let n = s.rows();
    let asym = s.asymmetry().ok_or(FlatError::DimensionMismatch {
        expected: s.rows(),
        got: s.cols(),
    })?;
    if asym > 1e-10 * (1.0 + s.max_abs()) {
        return Err(FlatError::NotSymmetric(asym));
    }
    let mut a = s.symmetrized();
    let mut v = Mat::identity(n);
    let target = 1e-13 * a.frobenius_norm();
    let off = |a: &Mat| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[(i, j)] * a[(i, j)];
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && off(&a) > target {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_col(dst, &v.col(src));
    }
    Ok(SymEigen { values, vectors, sweeps })
}

/// Full singular value decomposition `A = U Σ Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m×m` orthogonal.
    pub u: Mat,
    /// `min(m,n)` singular values, decreasing.
    pub sigma: Vec<f64>,
    /// `n×n` orthogonal.
    pub v: Mat,
}

impl Svd {
    /// `U Σ Vᵀ` with the rectangular `Σ`.
    pub fn reconstruct(&self) -> Mat {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut s = Mat::zeros(m, n);
        for (i, &x) in self.sigma.iter().enumerate() {
            s[(i, i)] = x;
        }
        self.u.matmul(&s).matmul(&self.v.transpose())
    }

    /// Number of singular values above `rel·σ₁`.
    pub fn rank(&self, rel: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > rel * top).count()
    }

    /// Multiplicity of the largest singular value under a relative gap.
    pub fn top_multiplicity(&self, rel_gap: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return self.sigma.len();
        }
        self.sigma.iter().filter(|&&s| top - s <= rel_gap * top).count()
    }
}

/// SVD through the eigendecomposition of the smaller Gram matrix.
///
/// Singular vectors on the other side are recovered as `A v / σ` for
/// `σ > 1e-12·max(1, σ₁)` and completed to an orthonormal basis by
/// Gram–Schmidt. Accuracy degrades for condition numbers beyond ~1e6.
pub fn svd(a: &Mat) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    // m >= n: eigen of AᵀA (n×n).
    let gram = a.transpose().matmul(a);
    let eig = jacobi_symmetric_eigen(&gram).expect("Gram matrix is symmetric");
    let sigma: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let v = eig.vectors;
    let cutoff = 1e-12 * sigma.first().copied().unwrap_or(0.0).max(1.0);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (j, &s) in sigma.iter().enumerate() {
        if s > cutoff {
            let av = a.matvec(&v.col(j));
            cols.push(scaled(&av, 1.0 / s));
        } else {
            break;
        }
    }
    let u = complete_orthonormal(cols, m);
    Svd { u, sigma, v }
}

/// Re-orthonormalizes `cols` (modified Gram–Schmidt, two passes) and
/// completes them with canonical basis vectors to an `m×m` orthogonal matrix.
pub fn complete_orthonormal(cols: Vec<Vec<f64>>, m: usize) -> Mat {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let push = |mut w: Vec<f64>, basis: &mut Vec<Vec<f64>>, strict: bool| {
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= p * bi;
                }
            }
        }
        let nw = norm(&w);
        if nw > 1e-8 || (!strict && nw > 0.0) {
            basis.push(scaled(&w, 1.0 / nw));
        }
    };
    for c in cols {
        push(c, &mut basis, false);
    }
    let mut k = 0;
    while basis.len() < m && k < m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        push(e, &mut basis, true);
        k += 1;
    }
    let mut out = Mat::zeros(m, m);
    for (j, b) in basis.iter().enumerate().take(m) {
        out.set_col(j, b);
    }
    out
}

/// Inverse of a square matrix through its SVD, rejecting condition
/// numbers at or above `max_cond`.
pub fn inverse(a: &Mat, max_cond: f64) -> Result<Mat> {
    if a.rows() != a.cols() {
        return Err(FlatError::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    let d = svd(a);
    let top = d.sigma.first().copied().unwrap_or(0.0);
    let bottom = d.sigma.last().copied().unwrap_or(0.0);
    let cond = if bottom > 0.0 { top / bottom } else { f64::INFINITY };
    if !(cond < max_cond) {
        return Err(FlatError::Singular(cond));
    }
    let n = a.rows();
    let mut sinv = Mat::zeros(n, n);
    for (i, &s) in d.sigma.iter().enumerate() {
        sinv[(i, i)] = 1.0 / s;
    }
    Ok(d.v.matmul(&sinv).matmul(&d.u.transpose()))
}
