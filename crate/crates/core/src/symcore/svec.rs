//! Inner-product-preserving coordinates on symmetric matrices.
//!
//! Basis order is diagonal first (`E_11, ..., E_kk`), then the off-diagonal
//! elements `E_12, E_13, ..., E_{k-1,k}` in row-major order of the upper
//! triangle. Off-diagonal basis elements carry `1/sqrt(2)` in both positions,
//! so the coordinate of `S` along `E_ij` is `sqrt(2) * S_ij`. This ordering is
//! part of the certificate file format.

use std::f64::consts::SQRT_2;

use super::matrix::SymMatrix;
use crate::error::{Error, Result};

/// `k(k+1)/2`
pub fn svec_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Inverse of [`svec_len`], if `d` is triangular.
pub fn triangular_root(d: usize) -> Option<usize> {
    let k = (((8 * d + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (k.saturating_sub(1)..=k + 1).find(|&c| svec_len(c) == d)
}

/// Upper-triangle off-diagonal pairs in basis order.
pub fn offdiag_pairs(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
}

pub fn svec(s: &SymMatrix) -> Vec<f64> {
    let k = s.dim();
    let mut out = Vec::with_capacity(svec_len(k));
    out.extend((0..k).map(|i| s.get(i, i)));
    out.extend(offdiag_pairs(k).map(|(i, j)| SQRT_2 * s.get(i, j)));
    out
}

pub fn smat(y: &[f64]) -> Result<SymMatrix> {
    let k = triangular_root(y.len()).ok_or(Error::NonTriangularLength(y.len()))?;
    let mut s = SymMatrix::zeros(k);
    for i in 0..k {
        s.set(i, i, y[i]);
    }
    for (t, (i, j)) in offdiag_pairs(k).enumerate() {
        s.set(i, j, y[k + t] / SQRT_2);
    }
    Ok(s)
}

/// Basis matrix `E_t` for coordinate index `t`.
pub fn basis_element(k: usize, t: usize) -> SymMatrix {
    let mut y = vec![0.0; svec_len(k)];
    y[t] = 1.0;
    smat(&y).expect("triangular by construction")
}
