//! Dense row-major matrices and the few factorizations the crate needs.

use crate::math;
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch(format!("ragged rows: {} vs {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
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

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks(0) panics, and zero-width matrices still have rows
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * self^T`.
    pub fn gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Largest `|a_ij - a_ji|`; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.row_iter().map(|r| dot(r, x)).collect()
    }

    /// Rows and columns reordered by `perm` (the same permutation on both sides).
    pub fn permute_symmetric(&self, perm: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                out[(i, j)] = self[(pi, pj)];
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// `||exact - approx||_F / ||exact||_F`.
pub fn relative_frobenius_error(exact: &Matrix, approx: &Matrix) -> Result<f64> {
    let diff = exact.sub(approx)?;
    let denom = exact.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(diff.frobenius_norm() / denom)
}

/// Gram-Schmidt (applied twice) on the rows of `m`, in place.
///
/// Returns the smallest pre-normalization row norm seen on the first pass,
/// which callers use to detect a rank-deficient input.
pub(crate) fn orthonormalize_rows(m: &mut Matrix) -> f64 {
    let mut smallest = f64::INFINITY;
    for pass in 0..2 {
        for i in 0..m.rows {
            for k in 0..i {
                let (head, tail) = m.data.split_at_mut(i * m.cols);
                let qk = &head[k * m.cols..(k + 1) * m.cols];
                let ri = &mut tail[..m.cols];
                let c = dot(qk, ri);
                for (r, q) in ri.iter_mut().zip(qk) {
                    *r -= c * q;
                }
            }
            let n = norm(m.row(i));
            if pass == 0 {
                smallest = smallest.min(n);
            }
            if n > 0.0 {
                for v in m.row_mut(i) {
                    *v /= n;
                }
            }
        }
    }
    smallest
}

/// Smallest eigenvalue of a symmetric matrix.
///
/// Lanczos with full reorthogonalization; the tridiagonal Ritz problem is solved
/// by Sturm-sequence bisection and the Ritz residual `beta_k |y_k|` is used as
/// the stopping rule (`1e-10 ||A||_F`). A deterministic start vector keeps the
/// result reproducible; invariant subspaces trigger a restart with a fresh
/// vector orthogonal to the current basis.
pub fn min_eigenvalue(a: &Matrix) -> Result<f64> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::ShapeMismatch(format!("min_eigenvalue needs a nonempty square matrix, got {}x{}", a.rows(), a.cols())));
    }
    let scale = a.frobenius_norm();
    let asym = a.max_asymmetry();
    if asym > 1e-10 * scale.max(1.0) {
        return Err(Error::NonSymmetric { asymmetry: asym });
    }
    if n == 1 {
        return Ok(a[(0, 0)]);
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-10 * scale;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut alpha: Vec<f64> = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n);
    let mut seed = 0x9e37_79b9_7f4a_7c15_u64;
    let mut q = start_vector(n, &mut seed, &basis);
    let mut theta = f64::NAN;
    for k in 0..n {
        let mut w = a.mul_vec(&q);
        let ak = dot(&w, &q);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= ak * qi;
        }
        if let Some(prev) = basis.last() {
            let b = *beta.last().unwrap();
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= b * pi;
            }
        }
        basis.push(q);
        alpha.push(ak);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let bk = norm(&w);
        theta = tridiagonal_min_eigenvalue(&alpha, &beta);
        if k + 1 == n {
            break;
        }
        let y_last = ritz_vector_last_component(&alpha, &beta, theta);
        if bk * y_last.abs() <= tol && bk > tol {
            break;
        }
        if bk <= tol {
            // invariant subspace; continue in its orthogonal complement
            beta.push(0.0);
            q = start_vector(n, &mut seed, &basis);
        } else {
            beta.push(bk);
            q = w.into_iter().map(|v| v / bk).collect();
        }
    }
    Ok(theta)
}

fn start_vector(n: usize, seed: &mut u64, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                *seed = seed.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
                ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// Number of eigenvalues of the tridiagonal `(alpha, beta)` strictly below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_min_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i < beta.len() && i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - left - right);
        hi = hi.max(alpha[i] + left + right);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(alpha, beta, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Last component of the unit eigenvector of the tridiagonal for eigenvalue
/// `theta`, by two steps of inverse iteration.
fn ritz_vector_last_component(alpha: &[f64], beta: &[f64], theta: f64) -> f64 {
    let m = alpha.len();
    let scale = alpha.iter().chain(beta).fold(1e-300_f64, |s, v| s.max(v.abs()));
    let shift = theta - 1e-10 * scale;
    let mut y = vec![1.0; m];
    for _ in 0..3 {
        // Thomas algorithm on (T - shift I) x = y
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut denom = alpha[0] - shift;
        c[0] = if m > 1 { beta[0] / denom } else { 0.0 };
        d[0] = y[0] / denom;
        for i in 1..m {
            denom = alpha[i] - shift - beta[i - 1] * c[i - 1];
            if denom == 0.0 {
                denom = 1e-300;
            }
            c[i] = if i + 1 < m { beta[i] / denom } else { 0.0 };
            d[i] = (y[i] - beta[i - 1] * d[i - 1]) / denom;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        let nx = norm(&x);
        if !nx.is_finite() || nx == 0.0 {
            return 1.0;
        }
        y = x.into_iter().map(|v| v / nx).collect();
    }
    y[m - 1]
}
