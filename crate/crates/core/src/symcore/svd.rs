//! One-sided (Hestenes) Jacobi SVD and the rank factorization built on it.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Default relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

const SVD_MAX_SWEEPS: usize = 100;

/// Thin SVD `A = U diag(s) V^T` with singular values descending. `V` is
/// always square (`q x q`), so it spans the null space too; `U` is `p x r`
/// with `r = min(p, q)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&x| x > rel_tol * smax).count()
    }
}

/// Column-orthogonalizing Jacobi on a tall-or-square matrix `a` (`m >= n`).
/// Returns the rotated columns and the accumulated rotation `V` (`n x n`).
fn hestenes(mut cols: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, DenseMatrix)> {
    let n = cols.len();
    let mut v = DenseMatrix::identity(n);
    let frob2: f64 = cols.iter().map(|c| dot(c, c)).sum();
    // Columns below this squared norm are numerically zero.
    let negligible = frob2 * (f64::EPSILON * f64::EPSILON) * 1e-4;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, yj) = (*x, *y);
                    *x = c * xi - s * yj;
                    *y = s * xi + c * yj;
                }
                for r in 0..n {
                    let (vi, vj) = (v.get(r, i), v.get(r, j));
                    v.set(r, i, c * vi - s * vj);
                    v.set(r, j, s * vi + c * vj);
                }
            }
        }
        if !rotated {
            return Ok((cols, v));
        }
    }
    Err(Error::NoConvergence(SVD_MAX_SWEEPS))
}

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let (p, q) = (a.rows(), a.cols());
    // Pad short matrices with zero rows so V comes out square.
    let m = p.max(q);
    let cols: Vec<Vec<f64>> = (0..q)
        .map(|j| {
            let mut c = a.col(j);
            c.resize(m, 0.0);
            c
        })
        .collect();
    let (cols, v) = hestenes(cols)?;
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let r = p.min(q);
    let s: Vec<f64> = order.iter().take(r).map(|&t| norms[t]).collect();
    let u = DenseMatrix::from_fn(p, r, |i, j| {
        let t = order[j];
        if norms[t] > 0.0 {
            cols[t][i] / norms[t]
        } else {
            0.0
        }
    });
    let v = DenseMatrix::from_fn(q, q, |i, j| v.get(i, order[j]));
    Ok(Svd { u, s, v })
}

pub fn matrix_rank(a: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    Ok(svd(a)?.rank(rel_tol))
}

/// Minimum-norm least-squares solution of `A x = b` and the max-abs residual.
pub fn lstsq(a: &DenseMatrix, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, f64)> {
    assert_eq!(a.rows(), b.len());
    let dec = svd(a)?;
    let r = dec.rank(rel_tol);
    let mut x = vec![0.0; a.cols()];
    for t in 0..r {
        let ut = dec.u.col(t);
        let coef = dot(&ut, b) / dec.s[t];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coef * dec.v.get(i, t);
        }
    }
    let ax = a.mul_vec(&x);
    let res = ax
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    Ok((x, res))
}

/// Orthonormal basis of the null space of `A`, as columns of a `q x (q-r)`
/// matrix.
pub fn null_space(a: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let q = a.cols();
    if a.rows() == 0 || a.max_abs() == 0.0 {
        return Ok(DenseMatrix::identity(q));
    }
    let dec = svd(a)?;
    let r = dec.rank(rel_tol);
    let idx: Vec<usize> = (r..q).collect();
    Ok(dec.v.select_cols(&idx))
}

/// `M = U V` with inner dimension equal to the numerical rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankFactorization {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub rank: usize,
    /// `max |M - U V|`
    pub residual: f64,
}

/// Rank factorization with `U` having orthonormal columns.
///
/// With `ones_first`, the basis is changed afterwards so that `U`'s first
/// column is exactly the all-ones vector; this requires `1` to lie in the
/// column span.
pub fn rank_factor(m: &DenseMatrix, rel_tol: f64, ones_first: bool) -> Result<RankFactorization> {
    let (p, q) = (m.rows(), m.cols());
    let dec = svd(m)?;
    let r = dec.rank(rel_tol);
    let keep: Vec<usize> = (0..r).collect();
    let u = dec.u.select_cols(&keep);
    let v = DenseMatrix::from_fn(r, q, |i, j| dec.s[i] * dec.v.get(j, i));
    let (u, v) = if ones_first {
        ones_first_basis(&u, &v, rel_tol)?
    } else {
        (u, v)
    };
    debug_assert_eq!(u.rows(), p);
    let residual = m.sub(&u.matmul(&v)).max_abs();
    Ok(RankFactorization {
        u,
        v,
        rank: r,
        residual,
    })
}

/// Rewrites `U V` (with orthonormal `U`) as `U' V'` where `U'`'s first column
/// is exactly `1`.
fn ones_first_basis(
    u: &DenseMatrix,
    v: &DenseMatrix,
    rel_tol: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (p, r) = (u.rows(), u.cols());
    let ones = vec![1.0; p];
    let c = u.vec_mul(&ones);
    let proj = u.mul_vec(&c);
    let residual = proj.iter().fold(0.0f64, |acc, x| acc.max((1.0 - x).abs()));
    if r == 0 || residual > (10.0 * rel_tol).max(1e-8) {
        return Err(Error::OnesNotInSpan { residual });
    }
    // T = [c, H_2..H_r] with H the Householder reflector sending e_1 to +-c/|c|.
    let cn = dot(&c, &c).sqrt();
    let w: Vec<f64> = c.iter().map(|x| x / cn).collect();
    let sign = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut h = DenseMatrix::identity(r);
    let mut hv = w.clone();
    hv[0] += sign;
    let hn = dot(&hv, &hv);
    if hn > 0.0 {
        for i in 0..r {
            for j in 0..r {
                let val = if i == j { 1.0 } else { 0.0 } - 2.0 * hv[i] * hv[j] / hn;
                h.set(i, j, val);
            }
        }
    }
    // Columns 1.. of H are orthonormal and orthogonal to c.
    let t = DenseMatrix::from_fn(r, r, |i, j| if j == 0 { c[i] } else { h.get(i, j) });
    let tinv = DenseMatrix::from_fn(r, r, |i, j| {
        if i == 0 {
            c[j] / (cn * cn)
        } else {
            h.get(j, i)
        }
    });
    let mut u2 = u.matmul(&t);
    for i in 0..p {
        u2.set(i, 0, 1.0);
    }
    Ok((u2, tinv.matmul(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn svd_reconstructs() {
        let a = m(&[
            &[1.0, 2.0, 3.0],
            &[4.0, 5.0, 6.5],
            &[0.5, -1.0, 2.0],
            &[1.0, 0.0, 0.0],
        ]);
        let d = svd(&a).unwrap();
        let us = DenseMatrix::from_fn(4, 3, |i, j| d.u.get(i, j) * d.s[j]);
        let rec = us.matmul(&d.v.transpose());
        assert!(rec.sub(&a).max_abs() < 1e-13);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        // wide input
        let at = a.transpose();
        let d = svd(&at).unwrap();
        assert_eq!(d.v.rows(), 4);
        let us = DenseMatrix::from_fn(3, 3, |i, j| d.u.get(i, j) * d.s[j]);
        let vt = d.v.select_cols(&[0, 1, 2]).transpose();
        assert!(us.matmul(&vt).sub(&at).max_abs() < 1e-13);
    }

    #[test]
    fn rank_examples() {
        let ones = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(rank_factor(&ones, RANK_TOL, false).unwrap().rank, 1);
        let id = DenseMatrix::identity(3);
        let f = rank_factor(&id, RANK_TOL, false).unwrap();
        assert_eq!(f.rank, 3);
        assert!(f.residual < 1e-14);
    }

    #[test]
    fn ones_first_form() {
        // rows sum to one -> ones in the column span
        let a = m(&[
            &[0.5, 0.5, 0.0],
            &[0.2, 0.3, 0.5],
            &[0.0, 0.1, 0.9],
            &[0.4, 0.4, 0.2],
        ]);
        let f = rank_factor(&a, RANK_TOL, true).unwrap();
        assert_eq!(f.rank, 3);
        assert!((0..4).all(|i| f.u.get(i, 0) == 1.0));
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn ones_not_in_span() {
        let a = m(&[&[1.0, 0.0], &[2.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(
            rank_factor(&a, RANK_TOL, true),
            Err(Error::OnesNotInSpan { .. })
        ));
    }

    #[test]
    fn null_space_and_lstsq() {
        let a = m(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]);
        let n = null_space(&a, RANK_TOL).unwrap();
        assert_eq!(n.cols(), 1);
        assert!(a.mul_vec(&n.col(0)).iter().all(|x| x.abs() < 1e-14));
        let (x, res) = lstsq(&a, &[2.0, 2.0], RANK_TOL).unwrap();
        assert!(res < 1e-14);
        assert!((x[0] - x[2]).abs() < 1e-14);
    }
}
