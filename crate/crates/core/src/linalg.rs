//! Small dense linear algebra.
//!
//! Everything here works on row-major `f64` matrices of modest size (the
//! largest systems are the `(q+1)`-sized normal equations and per-period
//! `q x q` blocks), so plain loops are fine and keep the crate `no_std`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
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
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `v' A v` for square `A`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
    }

    pub fn sub_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a -= b);
    }

    /// Adds `s * u v'`.
    pub fn add_outer(&mut self, s: f64, u: &[f64], v: &[f64]) {
        assert_eq!((self.rows, self.cols), (u.len(), v.len()));
        for i in 0..self.rows {
            let su = s * u[i];
            if su == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                self[(i, j)] += su * v[j];
            }
        }
    }

    /// Replaces the matrix by `(A + A') / 2`.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors `a`. Only the lower triangle is read.
    ///
    /// Fails with [`Error::Singular`] when a pivot is not positive relative
    /// to the diagonal scale.
    pub fn new(a: &Matrix, what: &'static str) -> Result<Self> {
        assert!(a.is_square(), "cholesky of non-square matrix");
        let n = a.rows();
        let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
        let tol = scale * 1e-14;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > tol) || !d.is_finite() {
                return Err(Error::Singular(what));
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `L' x = y` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let mut out = Matrix::zeros(n, b.cols());
        let mut col = vec![0.0; n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            self.forward(&mut col);
            self.backward(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix {
        let mut inv = self.solve_matrix(&Matrix::identity(self.dim()));
        inv.symmetrize();
        inv
    }

    /// `L^{-1}` (lower triangular).
    pub fn factor_inverse(&self) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[j] = 1.0;
            self.forward(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim())
            .map(|i| libm::log(self.l[(i, i)]))
            .sum::<f64>()
    }
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &Matrix, what: &'static str) -> Result<Matrix> {
    Ok(Cholesky::new(a, what)?.inverse())
}

/// Complex eigenvalue `re + i*im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// iteration (eigenvalues-only variant of EISPACK `hqr`).
///
/// Entries below the first subdiagonal are ignored. Returns `None` if the
/// iteration fails to converge.
pub fn hessenberg_eigenvalues(h: &Matrix) -> Option<Vec<Eigenvalue>> {
    assert!(h.is_square());
    let nn = h.rows() as isize;
    if nn == 0 {
        return Some(Vec::new());
    }
    let mut h = h.clone();
    let mut wr = vec![0.0; nn as usize];
    let mut wi = vec![0.0; nn as usize];
    let eps = f64::EPSILON;

    let at = |m: &Matrix, i: isize, j: isize| m[(i as usize, j as usize)];

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += at(&h, i, j).abs();
        }
    }

    let mut n = nn - 1;
    let mut exshift = 0.0;
    let mut iter = 0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let (mut s, mut z): (f64, f64);
    let (mut w, mut x, mut y);

    while n >= 0 {
        let mut l = n;
        while l > 0 {
            s = at(&h, l - 1, l - 1).abs() + at(&h, l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if at(&h, l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            wr[n as usize] = at(&h, n, n) + exshift;
            wi[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = at(&h, n, n - 1) * at(&h, n - 1, n);
            p = (at(&h, n - 1, n - 1) - at(&h, n, n)) / 2.0;
            q = p * p + w;
            z = libm::sqrt(q.abs());
            x = at(&h, n, n) + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[(n - 1) as usize] = x + z;
                wr[n as usize] = if z != 0.0 { x - w / z } else { x + z };
                wi[(n - 1) as usize] = 0.0;
                wi[n as usize] = 0.0;
            } else {
                wr[(n - 1) as usize] = x + p;
                wr[n as usize] = x + p;
                wi[(n - 1) as usize] = z;
                wi[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = at(&h, n, n);
            y = 0.0;
            w = 0.0;
            if l < n {
                y = at(&h, n - 1, n - 1);
                w = at(&h, n, n - 1) * at(&h, n - 1, n);
            }
            if iter == 10 {
                exshift += x;
                for i in 0..=n {
                    h[(i as usize, i as usize)] -= x;
                }
                s = at(&h, n, n - 1).abs() + at(&h, n - 1, n - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = libm::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=n {
                        h[(i as usize, i as usize)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > 300 {
                return None;
            }

            let mut m = n - 2;
            while m >= l {
                z = at(&h, m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / at(&h, m + 1, m) + at(&h, m, m + 1);
                q = at(&h, m + 1, m + 1) - z - r - s;
                r = at(&h, m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if at(&h, m, m - 1).abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (at(&h, m - 1, m - 1).abs() + z.abs() + at(&h, m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                h[(i as usize, (i - 2) as usize)] = 0.0;
                if i > m + 2 {
                    h[(i as usize, (i - 3) as usize)] = 0.0;
                }
            }

            let mut k = m;
            while k <= n - 1 {
                let notlast = k != n - 1;
                if k != m {
                    p = at(&h, k, k - 1);
                    q = at(&h, k + 1, k - 1);
                    r = if notlast { at(&h, k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = libm::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k as usize, (k - 1) as usize)] = -s * x;
                    } else if l != m {
                        h[(k as usize, (k - 1) as usize)] = -at(&h, k, k - 1);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = at(&h, k, j) + q * at(&h, k + 1, j);
                        if notlast {
                            p += r * at(&h, k + 2, j);
                            h[((k + 2) as usize, j as usize)] -= p * z;
                        }
                        h[(k as usize, j as usize)] -= p * x;
                        h[((k + 1) as usize, j as usize)] -= p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * at(&h, i, k) + y * at(&h, i, k + 1);
                        if notlast {
                            p += z * at(&h, i, k + 2);
                            h[(i as usize, (k + 2) as usize)] -= p * r;
                        }
                        h[(i as usize, k as usize)] -= p;
                        h[(i as usize, (k + 1) as usize)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    Some(
        wr.into_iter()
            .zip(wi)
            .map(|(re, im)| Eigenvalue { re, im })
            .collect(),
    )
}
