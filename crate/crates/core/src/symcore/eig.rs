//! Cyclic Jacobi eigensolver for small symmetric matrices.

use super::matrix::{DenseMatrix, SymMatrix};
use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `S = Q diag(values) Q^T`; eigenvalues ascending,
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymEigen {
    /// `Q diag(f(lambda)) Q^T`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let k = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(k, |i, j| {
            (0..k)
                .map(|t| self.vectors.get(i, t) * mapped[t] * self.vectors.get(j, t))
                .sum()
        })
    }

    pub fn vector(&self, t: usize) -> Vec<f64> {
        self.vectors.col(t)
    }
}

pub fn eig_sym(s: &SymMatrix) -> Result<SymEigen> {
    let k = s.dim();
    let mut a: Vec<f64> = s.as_slice().to_vec();
    let mut v = DenseMatrix::identity(k);
    let idx = |i: usize, j: usize| i * k + j;

    let total: f64 = a.iter().map(|x| x * x).sum();
    let mut converged = k <= 1 || total == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    off += a[idx(i, j)] * a[idx(i, j)];
                } else {
                    diag += a[idx(i, j)] * a[idx(i, j)];
                }
            }
        }
        if off <= (f64::EPSILON * f64::EPSILON) * (diag + off) || off == 0.0 {
            break;
        }
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                // Rutishauser: drop entries below the diagonal resolution.
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[idx(p, q)] = 0.0;
                    a[idx(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                a[idx(p, p)] = app - t * apq;
                a[idx(q, q)] = aqq + t * apq;
                a[idx(p, q)] = 0.0;
                a[idx(q, p)] = 0.0;
                for r in 0..k {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[idx(r, p)];
                    let arq = a[idx(r, q)];
                    let np = c * arp - sn * arq;
                    let nq = sn * arp + c * arq;
                    a[idx(r, p)] = np;
                    a[idx(p, r)] = np;
                    a[idx(r, q)] = nq;
                    a[idx(q, r)] = nq;
                }
                for r in 0..k {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, c * vrp - sn * vrq);
                    v.set(r, q, sn * vrp + c * vrq);
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| a[idx(x, x)].total_cmp(&a[idx(y, y)]));
    let values = order.iter().map(|&t| a[idx(t, t)]).collect();
    let vectors = DenseMatrix::from_fn(k, k, |i, j| v.get(i, order[j]));
    Ok(SymEigen { values, vectors })
}

/// Smallest eigenvalue; `S` is psd iff this is `>= 0`.
pub fn min_eig(s: &SymMatrix) -> Result<f64> {
    match s.dim() {
        0 => Ok(f64::INFINITY),
        1 => Ok(s.get(0, 0)),
        _ => Ok(eig_sym(s)?.values[0]),
    }
}

/// Frobenius-nearest psd matrix: negative eigenvalues clipped to zero.
pub fn project_psd(s: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(s)?;
    if e.values.first().is_none_or(|&l| l >= 0.0) {
        return Ok(s.clone());
    }
    Ok(e.reconstruct_with(|l| l.max(0.0)))
}

/// Negative part `Q diag(min(lambda, 0)) Q^T` together with the eigenvalues.
pub fn negative_part(s: &SymMatrix) -> Result<(SymMatrix, Vec<f64>)> {
    let e = eig_sym(s)?;
    let neg = e.reconstruct_with(|l| l.min(0.0));
    Ok((neg, e.values))
}
