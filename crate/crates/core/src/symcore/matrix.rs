use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Real symmetric `k x k` matrix.
///
/// Storage is full row-major, but every mutation writes both `(i, j)` and
/// `(j, i)`, and construction from rows mirrors the upper triangle, so the
/// two triangles are always bitwise equal.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    k: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(k: usize) -> Self {
        SymMatrix {
            k,
            data: vec![0.0; k * k],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            m.data[i * k + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from a function evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            for j in i..k {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from square rows, mirroring the upper triangle onto the lower.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix rows must all have length {k}"
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self::from_fn(k, |i, j| rows[i][j]))
    }

    /// Symmetric part `(A + A^T)/2` of a square dense matrix.
    pub fn symmetrize(a: &DenseMatrix) -> Self {
        assert_eq!(a.rows(), a.cols(), "symmetrize needs a square matrix");
        Self::from_fn(a.rows(), |i, j| 0.5 * (a.get(i, j) + a.get(j, i)))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.k + j] = v;
        self.data[j * self.k + i] = v;
    }

    /// Full row-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.k.max(1))
            .map(|r| r.to_vec())
            .take(self.k)
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix {
            p: self.k,
            q: self.k,
            data: self.data.clone(),
        }
    }

    /// Trace inner product `<A, B> = Trace(A B)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.k, other.k);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix {
            k: self.k,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &SymMatrix) {
        debug_assert_eq!(self.k, other.k);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `x^T S x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let k = self.k;
        let mut acc = 0.0;
        for i in 0..k {
            let row = &self.data[i * k..(i + 1) * k];
            let ri: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += x[i] * ri;
        }
        acc
    }

    /// Block-diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &SymMatrix) -> Self {
        let (k1, k2) = (self.k, other.k);
        let mut out = SymMatrix::zeros(k1 + k2);
        for i in 0..k1 {
            for j in i..k1 {
                out.set(i, j, self.get(i, j));
            }
        }
        for i in 0..k2 {
            for j in i..k2 {
                out.set(k1 + i, k1 + j, other.get(i, j));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// Dense real `p x q` matrix, row-major, finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    p: usize,
    q: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(p: usize, q: usize) -> Self {
        DenseMatrix {
            p,
            q,
            data: vec![0.0; p * q],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(p: usize, q: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(p * q);
        for i in 0..p {
            for j in 0..q {
                data.push(f(i, j));
            }
        }
        DenseMatrix { p, q, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let q = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(DenseMatrix {
            p,
            q,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Column-major construction from column vectors.
    pub fn from_cols(cols: &[Vec<f64>]) -> Self {
        let q = cols.len();
        let p = cols.first().map_or(0, |c| c.len());
        Self::from_fn(p, q, |i, j| cols[j][i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.q + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.q + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.q, self.p, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.q, other.p, "matmul inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.p, other.q);
        for i in 0..self.p {
            for l in 0..self.q {
                let a = self.get(i, l);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(l);
                let dst = &mut out.data[i * other.q..(i + 1) * other.q];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.q, x.len(), "mul_vec dimension");
        (0..self.p)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x^T A` as a vector of length `q`.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.p, x.len(), "vec_mul dimension");
        let mut out = vec![0.0; self.q];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.p, self.q), (other.p, other.q));
        DenseMatrix {
            p: self.p,
            q: self.q,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        DenseMatrix {
            p: self.p,
            q: self.q,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.q, |i, j| self.get(idx[i], j))
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.p, idx.len(), |i, j| self.get(i, idx[j]))
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hcat(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.p, other.p, "hcat row counts");
        Self::from_fn(self.p, self.q + other.q, |i, j| {
            if j < self.q {
                self.get(i, j)
            } else {
                other.get(i, j - self.q)
            }
        })
    }

    /// Cholesky factor `L` with `A = L L^T`; `None` unless `A` is numerically
    /// positive definite.
    pub fn cholesky(&self) -> Option<DenseMatrix> {
        assert_eq!(self.p, self.q);
        let n = self.p;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut s = self.get(j, j);
            for t in 0..j {
                s -= l.get(j, t) * l.get(j, t);
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let d = s.sqrt();
            l.set(j, j, d);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for t in 0..j {
                    s -= l.get(i, t) * l.get(j, t);
                }
                l.set(i, j, s / d);
            }
        }
        Some(l)
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` for a numerically singular matrix.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let inv = self.inverse()?;
        Some(inv.mul_vec(b))
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Option<DenseMatrix> {
        assert_eq!(self.p, self.q, "inverse needs a square matrix");
        let n = self.p;
        let scale = self.max_abs();
        if scale == 0.0 {
            return None;
        }
        let mut a = self.clone();
        let mut inv = DenseMatrix::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a.get(x, col).abs().total_cmp(&a.get(y, col).abs()))
                .unwrap();
            if a.get(piv, col).abs() <= 1e-14 * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = a.get(col, col);
            for j in 0..n {
                a.data[col * n + j] /= d;
                inv.data[col * n + j] /= d;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a.get(i, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[i * n + j] -= f * a.data[col * n + j];
                    inv.data[i * n + j] -= f * inv.data[col * n + j];
                }
            }
        }
        inv.is_finite().then_some(inv)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Serialize for DenseMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        DenseMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_mirrors_upper_triangle() {
        let s = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![7.0, 3.0]]).unwrap();
        assert_eq!(s.get(1, 0), 2.0);
        assert_eq!(s.get(0, 1), 2.0);
    }

    #[test]
    fn non_square_rows_rejected() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn inverse_and_cholesky() {
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        assert!(id.sub(&DenseMatrix::identity(2)).max_abs() < 1e-14);
        let l = a.cholesky().unwrap();
        assert!(l.matmul(&l.transpose()).sub(&a).max_abs() < 1e-14);
        let sing = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(sing.inverse().is_none());
        assert!(sing.cholesky().is_none());
    }

    #[test]
    fn block_diag_trace_identity() {
        let a = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let b = SymMatrix::from_diag(&[3.0]);
        let d = a.block_diag(&b);
        assert_eq!(d.dim(), 3);
        assert_eq!(d.trace(), 6.0);
        assert_eq!(d.get(0, 2), 0.0);
    }
}
