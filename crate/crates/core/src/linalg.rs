//! Small dense matrices.
//!
//! Every matrix in this crate is at most a handful of rows (frames, Jacobians,
//! Lie algebra elements), so a row-major `Vec` with straightforward loops is
//! all that is needed.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Real;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn try_from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().all(|row| row.len() == c) {
            Some(Self::from_rows(rows))
        } else {
            None
        }
    }

    /// Column vector (n×1).
    pub fn column_vector(v: &[T]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn from_f64(m: &Matrix<f64>) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&x| T::c(x)).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.as_f64()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(<[T]>::to_vec).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + s * b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> T {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .abs()
                        .partial_cmp(&a[(j, col)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[(pivot, col)] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for i in col + 1..n {
                let f = a[(i, col)] / p;
                for j in col..n {
                    let v = a[(col, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// Gauss-Jordan inverse; `None` when a pivot vanishes.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square(), "inverse of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs();
        if scale == T::zero() || !scale.is_finite() {
            return None;
        }
        let tiny = scale * T::epsilon() * T::c(16.0);
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                a[(i, col)]
                    .abs()
                    .partial_cmp(&a[(j, col)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[(pivot, col)].abs() <= tiny {
                return None;
            }
            a.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let av = a[(col, j)];
                    let iv = inv[(col, j)];
                    a[(i, j)] -= f * av;
                    inv[(i, j)] -= f * iv;
                }
            }
        }
        Some(inv)
    }

    /// Solves `self * x = b`.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        self.inverse().map(|inv| inv.mul_vec(b))
    }

    pub fn symmetric_part(&self) -> Self {
        self.add(&self.transpose()).scale(T::c(0.5))
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and a matrix whose columns are the eigenvectors.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.symmetric_part();
        let mut v = Self::identity(n);
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off <= T::epsilon() * T::epsilon() * (T::one() + a.frobenius_norm().powi(2)) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::c(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a[(i, i)]).collect(), v)
    }

    /// Symmetric square root of a positive semidefinite matrix; tiny negative
    /// eigenvalues are clamped to zero.
    pub fn psd_sqrt(&self) -> Self {
        let (vals, vecs) = self.symmetric_eigen();
        let roots: Vec<T> = vals.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
        vecs.mul(&Self::from_diag(&roots)).mul(&vecs.transpose())
    }

    /// Matrix exponential by scaling and squaring with a truncated Taylor
    /// series (terms are added until they fall below 1e-16 relative).
    pub fn expm(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        let norm = self.max_abs() * T::from_usize_lossy(n);
        let mut squarings = 0u32;
        let mut s = T::one();
        while norm * s > T::c(0.5) {
            s *= T::c(0.5);
            squarings += 1;
        }
        let a = self.scale(s);
        let mut term = Self::identity(n);
        let mut sum = Self::identity(n);
        for k in 1..40 {
            term = term.mul(&a).scale(T::one() / T::from_usize_lossy(k));
            sum = sum.add(&term);
            if term.max_abs() <= T::epsilon() * T::c(1e-2) {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// Planar rotation by `angle`.
    pub fn rotation2(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_rows(&[vec![c, -s], vec![s, c]])
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)` of `R^n`.
    pub fn plane_rotation(n: usize, i: usize, j: usize, angle: T) -> Self {
        let mut m = Self::identity(n);
        let (s, c) = angle.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(i, j)] = -s;
        m[(j, i)] = s;
        m
    }

    pub fn is_orthogonal(&self, tol: T) -> bool {
        self.is_square()
            && self
                .transpose()
                .mul(self)
                .sub(&Self::identity(self.rows))
                .max_abs()
                <= tol
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Serialize for Matrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for Matrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(deserializer)?;
        Matrix::try_from_rows(&rows).ok_or_else(|| serde::de::Error::custom("ragged matrix rows"))
    }
}
