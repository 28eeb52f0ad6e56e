//! Small dense square matrices: the handful of operations the metric layer needs.

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;

/// Dense `n x n` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(FinslerError::DimensionMismatch { expected: n, found: bad.len() });
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn diagonal(diag: &[T]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { T::zero() })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// `u^T M v`.
    pub fn bilinear(&self, u: &[T], v: &[T]) -> T {
        dot(u, &self.mul_vec(v))
    }

    pub fn scale(&self, k: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * k).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect() }
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(&self.data)
    }

    /// Lower-triangular Cholesky factor `L` with `M = L L^T`.
    pub fn cholesky(&self) -> Result<Matrix<T>> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > T::zero()) {
                return Err(FinslerError::NotPositiveDefinite { pivot: j, value: d.to_f64_lossy() });
            }
            let djj = d.sqrt();
            l.set(j, j, djj);
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, v / djj);
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix through its Cholesky factor.
    pub fn inverse_spd(&self) -> Result<Matrix<T>> {
        let l = self.cholesky()?;
        let n = self.n;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![T::zero(); n];
        for col in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[col] = T::one();
            // forward: L z = e
            let mut z = vec![T::zero(); n];
            for i in 0..n {
                let mut v = e[i];
                for k in 0..i {
                    v -= l.get(i, k) * z[k];
                }
                z[i] = v / l.get(i, i);
            }
            // backward: L^T x = z
            let mut x = vec![T::zero(); n];
            for i in (0..n).rev() {
                let mut v = z[i];
                for k in (i + 1)..n {
                    v -= l.get(k, i) * x[k];
                }
                x[i] = v / l.get(i, i);
            }
            for i in 0..n {
                inv.set(i, col, x[i]);
            }
        }
        Ok(inv)
    }

    /// General inverse by Gauss-Jordan elimination with partial pivoting.
    ///
    /// Used where the matrix may be indefinite (the fundamental tensor of a
    /// non-regular metric).
    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.max_abs().max(T::min_positive_value());
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a.get(r, col).abs().partial_cmp(&a.get(s, col).abs()).unwrap())
                .unwrap();
            let p = a.get(pivot_row, col);
            if p.abs() <= T::epsilon() * scale {
                return Err(FinslerError::Singular { pivot: col });
            }
            if pivot_row != col {
                for j in 0..n {
                    let t = a.get(col, j);
                    a.set(col, j, a.get(pivot_row, j));
                    a.set(pivot_row, j, t);
                    let t = inv.get(col, j);
                    inv.set(col, j, inv.get(pivot_row, j));
                    inv.set(pivot_row, j, t);
                }
            }
            for j in 0..n {
                a.set(col, j, a.get(col, j) / p);
                inv.set(col, j, inv.get(col, j) / p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - f * a.get(col, j));
                    inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                }
            }
        }
        Ok(inv)
    }
}

#[inline]
pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd() -> Matrix<f64> {
        Matrix::from_rows(&[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]]).unwrap()
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd();
        let l = a.cholesky().unwrap();
        let r = l.mul(&l.transpose());
        assert!(r.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn inverses_agree() {
        let a = spd();
        let i1 = a.inverse_spd().unwrap();
        let i2 = a.inverse().unwrap();
        assert!(i1.sub(&i2).max_abs() < 1e-14);
        assert!(a.mul(&i1).sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn indefinite_rejected_by_cholesky_but_invertible() {
        let a = Matrix::diagonal(&[1.0f64, -2.0, 3.0]);
        assert!(matches!(a.cholesky(), Err(FinslerError::NotPositiveDefinite { pivot: 1, .. })));
        let inv = a.inverse().unwrap();
        assert!((inv.get(1, 1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(a.inverse(), Err(FinslerError::Singular { .. })));
    }

    #[test]
    fn ragged_rows_rejected() {
        let r = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0]]);
        assert!(matches!(r, Err(FinslerError::DimensionMismatch { .. })));
    }
}
