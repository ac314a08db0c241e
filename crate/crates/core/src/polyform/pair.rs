use serde::{Deserialize, Serialize};

use super::{slack_matrix, HPolyhedron, Inequality, NonnegMatrix, VPolytope};
use crate::error::{Error, Result};
use crate::symcore::{rank_factor, DenseMatrix, RANK_TOL};

/// A polytope `P` inside a polyhedron `Q` whose generalized slack matrix is a
/// row-normalized copy of some source matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NestedPair {
    #[serde(rename = "P")]
    pub inner: VPolytope,
    #[serde(rename = "Q")]
    pub outer: HPolyhedron,
    /// Positive factor applied to each kept source row.
    pub row_scalings: Vec<f64>,
    /// Shift applied to the rank-factorization coordinates.
    pub translation: Vec<f64>,
    /// Stripped all-zero rows and columns of the source matrix.
    pub zero_rows: Vec<usize>,
    pub zero_cols: Vec<usize>,
    pub source_shape: (usize, usize),
    /// Source rows/columns that survived stripping, in order.
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
}

impl NestedPair {
    /// `S_{P,Q}`, which reproduces the normalized source matrix.
    pub fn reconstruct(&self) -> Result<NonnegMatrix> {
        slack_matrix(&self.inner, &self.outer)
    }

    /// The stripped, row-normalized source matrix this pair represents.
    pub fn normalized_source(&self, m: &NonnegMatrix) -> Result<NonnegMatrix> {
        let d = m
            .as_dense()
            .select_rows(&self.kept_rows)
            .select_cols(&self.kept_cols);
        let scaled = DenseMatrix::from_fn(d.rows(), d.cols(), |i, j| {
            d.get(i, j) * self.row_scalings[i]
        });
        NonnegMatrix::new(scaled)
    }
}

/// Nested pair of polygons from a nonnegative rank-3 matrix.
pub fn pair_from_matrix(m: &NonnegMatrix) -> Result<NestedPair> {
    pair_from_matrix_rank(m, 3, RANK_TOL)
}

/// Nested pair in dimension `d - 1` from a nonnegative matrix of rank `d`.
///
/// Zero rows and columns are stripped, rows are scaled by `1/(M 1)_i` so the
/// all-ones vector enters the column span, and a rank factorization with
/// rows `(1, u_i)` of `U` gives `P = conv(u_i)` and
/// `Q = {x : (1, x^T) V >= 0}`. The pair is finally translated so the
/// centroid of the `u_i` is the origin.
pub fn pair_from_matrix_rank(m: &NonnegMatrix, d: usize, rel_tol: f64) -> Result<NestedPair> {
    if d < 2 {
        return Err(Error::DomainError(format!(
            "pair dimension needs rank >= 2, got {d}"
        )));
    }
    let dense = m.as_dense();
    let scale = m.max_entry();
    if scale == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let zero_cut = 1e-14 * scale;
    let (p, q) = (dense.rows(), dense.cols());
    let is_zero_row = |i: usize| dense.row(i).iter().all(|&x| x <= zero_cut);
    let is_zero_col = |j: usize| (0..p).all(|i| dense.get(i, j) <= zero_cut);
    let kept_rows: Vec<usize> = (0..p).filter(|&i| !is_zero_row(i)).collect();
    let kept_cols: Vec<usize> = (0..q).filter(|&j| !is_zero_col(j)).collect();
    let zero_rows: Vec<usize> = (0..p).filter(|&i| is_zero_row(i)).collect();
    let zero_cols: Vec<usize> = (0..q).filter(|&j| is_zero_col(j)).collect();
    let stripped = dense.select_rows(&kept_rows).select_cols(&kept_cols);

    let row_scalings: Vec<f64> = (0..stripped.rows())
        .map(|i| 1.0 / stripped.row(i).iter().sum::<f64>())
        .collect();
    let normalized = DenseMatrix::from_fn(stripped.rows(), stripped.cols(), |i, j| {
        stripped.get(i, j) * row_scalings[i]
    });

    let rank = crate::symcore::matrix_rank(&normalized, rel_tol)?;
    if rank != d {
        return Err(Error::RankMismatch {
            expected: d,
            found: rank,
        });
    }
    let fac = rank_factor(&normalized, rel_tol, true)?;
    let n = d - 1;
    let points: Vec<Vec<f64>> = (0..fac.u.rows())
        .map(|i| (1..d).map(|t| fac.u.get(i, t)).collect())
        .collect();
    // (1, x^T) V >= 0  <=>  -V[1.., j]^T x <= V[0, j]
    let ineqs: Vec<Inequality> = (0..fac.v.cols())
        .map(|j| Inequality {
            c: (1..d).map(|t| -fac.v.get(t, j)).collect(),
            d: fac.v.get(0, j),
        })
        .collect();
    let inner = VPolytope::from_points(points)?;
    let outer = HPolyhedron::new(n, ineqs)?;
    let translation = inner.centroid();
    let neg: Vec<f64> = translation.iter().map(|x| -x).collect();
    let inner = inner.translated(&neg);
    let outer = outer.translated(&translation);

    Ok(NestedPair {
        inner,
        outer,
        row_scalings,
        translation,
        zero_rows,
        zero_cols,
        source_shape: (p, q),
        kept_rows,
        kept_cols,
    })
}
