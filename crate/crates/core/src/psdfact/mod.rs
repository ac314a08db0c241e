//! Psd factorizations `M_ij = <A_i, B_j>`: verification, numeric search and
//! the block calculus behind the rank-3 bound.

mod rank3;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyform::{NestedPair, NonnegMatrix};
use crate::symcore::{min_eig, DenseMatrix, SymMatrix};

pub use rank3::rank3_upper_factorize;
pub use search::{search_factorization, SearchConfig};

/// Eigenvalue floor below which a factor is not considered psd.
pub const FACTOR_PSD_TOL: f64 = 1e-9;

/// Factor lists `A_1..A_p`, `B_1..B_q` of size `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorizationRepr", into = "FactorizationRepr")]
pub struct PsdFactorization {
    k: usize,
    a: Vec<SymMatrix>,
    b: Vec<SymMatrix>,
    /// `max |M_ij - <A_i, B_j>|` at the last verification; infinite until
    /// checked.
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
struct FactorizationRepr {
    k: usize,
    #[serde(rename = "A")]
    a: Vec<SymMatrix>,
    #[serde(rename = "B")]
    b: Vec<SymMatrix>,
    #[serde(default)]
    residual: f64,
}

impl TryFrom<FactorizationRepr> for PsdFactorization {
    type Error = Error;
    fn try_from(r: FactorizationRepr) -> Result<Self> {
        let mut f = PsdFactorization::new(r.k, r.a, r.b)?;
        f.residual = r.residual;
        Ok(f)
    }
}

impl From<PsdFactorization> for FactorizationRepr {
    fn from(f: PsdFactorization) -> Self {
        FactorizationRepr {
            k: f.k,
            a: f.a,
            b: f.b,
            residual: f.residual,
        }
    }
}

impl PsdFactorization {
    /// Checks sizes only; psd-ness is checked by [`verify_factorization`].
    pub fn new(k: usize, a: Vec<SymMatrix>, b: Vec<SymMatrix>) -> Result<Self> {
        if let Some(bad) = a.iter().chain(&b).find(|f| f.dim() != k) {
            return Err(Error::DimensionMismatch(format!(
                "factor of size {} in a size-{k} factorization",
                bad.dim()
            )));
        }
        if a.iter().chain(&b).any(|f| !f.is_finite()) {
            return Err(Error::InvalidInput("non-finite factor entry".into()));
        }
        Ok(PsdFactorization {
            k,
            a,
            b,
            residual: f64::INFINITY,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row_factors(&self) -> &[SymMatrix] {
        &self.a
    }

    pub fn col_factors(&self) -> &[SymMatrix] {
        &self.b
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a.len(), self.b.len())
    }

    /// The matrix `<A_i, B_j>`.
    pub fn reconstruct(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.a.len(), self.b.len(), |i, j| {
            self.a[i].inner(&self.b[j])
        })
    }

    pub fn with_residual_against(mut self, m: &NonnegMatrix) -> Result<Self> {
        self.residual = residual(m, &self)?;
        Ok(self)
    }
}

fn residual(m: &NonnegMatrix, f: &PsdFactorization) -> Result<f64> {
    if (m.rows(), m.cols()) != f.shape() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, factorization is {}x{}",
            m.rows(),
            m.cols(),
            f.a.len(),
            f.b.len()
        )));
    }
    Ok(m.as_dense().sub(&f.reconstruct()).max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub min_factor_eig: f64,
    pub pass: bool,
}

/// Pass iff `max |M - <A,B>| <= tol` and every factor has `lambda_min >= -tol`.
pub fn verify_factorization(
    m: &NonnegMatrix,
    f: &PsdFactorization,
    tol: f64,
) -> Result<VerifyReport> {
    let max_residual = residual(m, f)?;
    let mut min_factor_eig = f64::INFINITY;
    for s in f.a.iter().chain(&f.b) {
        min_factor_eig = min_factor_eig.min(min_eig(s)?);
    }
    Ok(VerifyReport {
        max_residual,
        min_factor_eig,
        pass: max_residual <= tol && min_factor_eig >= -tol,
    })
}

/// Factorization of `[M1 M2]` from factorizations of `M1` and `M2`:
/// row factors `diag(A_i, A'_i)`, column factors `diag(B_j, 0)` and
/// `diag(0, C_l)`.
pub fn concat_factorizations(
    f1: &PsdFactorization,
    f2: &PsdFactorization,
) -> Result<PsdFactorization> {
    if f1.a.len() != f2.a.len() {
        return Err(Error::RowCountMismatch(f1.a.len(), f2.a.len()));
    }
    let (k1, k2) = (f1.k, f2.k);
    let z1 = SymMatrix::zeros(k1);
    let z2 = SymMatrix::zeros(k2);
    let a =
        f1.a.iter()
            .zip(&f2.a)
            .map(|(x, y)| x.block_diag(y))
            .collect();
    let b =
        f1.b.iter()
            .map(|x| x.block_diag(&z2))
            .chain(f2.b.iter().map(|y| z1.block_diag(y)))
            .collect();
    let mut out = PsdFactorization::new(k1 + k2, a, b)?;
    out.residual = f1.residual.max(f2.residual);
    Ok(out)
}

/// Factorization of `M^T`.
pub fn transpose_factorization(f: &PsdFactorization) -> PsdFactorization {
    PsdFactorization {
        k: f.k,
        a: f.b.clone(),
        b: f.a.clone(),
        residual: f.residual,
    }
}

/// Factorization of `diag(r) M diag(s)`.
pub fn scale_factorization(f: &PsdFactorization, r: &[f64], s: &[f64]) -> Result<PsdFactorization> {
    if r.len() != f.a.len() || s.len() != f.b.len() {
        return Err(Error::DimensionMismatch(
            "scalar count differs from factor count".into(),
        ));
    }
    if let Some(&bad) = r.iter().chain(s).find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::NonpositiveScalar(bad));
    }
    Ok(PsdFactorization {
        k: f.k,
        a: f.a.iter().zip(r).map(|(x, &c)| x.scaled(c)).collect(),
        b: f.b.iter().zip(s).map(|(x, &c)| x.scaled(c)).collect(),
        residual: f64::INFINITY,
    })
}

/// Puts a factorization of a submatrix back into a `p x q` shape, with zero
/// factors for the rows and columns not in `rows`/`cols`.
pub fn embed_factorization(
    f: &PsdFactorization,
    rows: &[usize],
    cols: &[usize],
    shape: (usize, usize),
) -> Result<PsdFactorization> {
    if rows.len() != f.a.len() || cols.len() != f.b.len() {
        return Err(Error::DimensionMismatch(
            "index lists differ from factor counts".into(),
        ));
    }
    let zero = SymMatrix::zeros(f.k);
    let mut a = vec![zero.clone(); shape.0];
    let mut b = vec![zero; shape.1];
    for (t, &i) in rows.iter().enumerate() {
        *a.get_mut(i)
            .ok_or_else(|| Error::DimensionMismatch(format!("row {i} out of range")))? =
            f.a[t].clone();
    }
    for (t, &j) in cols.iter().enumerate() {
        *b.get_mut(j)
            .ok_or_else(|| Error::DimensionMismatch(format!("column {j} out of range")))? =
            f.b[t].clone();
    }
    Ok(PsdFactorization {
        k: f.k,
        a,
        b,
        residual: f.residual,
    })
}

/// Turns a factorization of a pair's slack matrix into one of the source
/// matrix the pair was built from.
pub fn denormalize(f: &PsdFactorization, pair: &NestedPair) -> Result<PsdFactorization> {
    let r: Vec<f64> = pair.row_scalings.iter().map(|s| 1.0 / s).collect();
    let ones = vec![1.0; f.b.len()];
    let scaled = scale_factorization(f, &r, &ones)?;
    embed_factorization(&scaled, &pair.kept_rows, &pair.kept_cols, pair.source_shape)
}

/// Exact size-`q` factorization `A_i = diag(M_i.)`, `B_j = e_j e_j^T`.
pub fn diagonal_factorization(m: &NonnegMatrix) -> PsdFactorization {
    let q = m.cols();
    let a = (0..m.rows())
        .map(|i| SymMatrix::from_diag(m.as_dense().row(i)))
        .collect();
    let b = (0..q)
        .map(|j| {
            let mut e = SymMatrix::zeros(q);
            e.set(j, j, 1.0);
            e
        })
        .collect();
    PsdFactorization {
        k: q,
        a,
        b,
        residual: 0.0,
    }
}

#[cfg(test)]
mod tests;
