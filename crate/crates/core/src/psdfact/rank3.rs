use log::debug;

use super::{
    concat_factorizations, diagonal_factorization, embed_factorization, search_factorization,
    transpose_factorization, verify_factorization, PsdFactorization, SearchConfig,
};
use crate::error::{Error, Result};
use crate::polyform::NonnegMatrix;
use crate::symcore::{SymMatrix, RANK_TOL};

/// Columns per chunk; a nonnegative rank-3 matrix with six columns is the
/// slack matrix of a nested pair inside a hexagon and has psd rank at most 4.
const CHUNK: usize = 6;

/// Size `<= 4 ceil(min(p, q)/6)` factorization of a nonnegative matrix of
/// rank at most 3, built chunk by chunk along the shorter side.
pub fn rank3_upper_factorize(m: &NonnegMatrix, cfg: &SearchConfig) -> Result<PsdFactorization> {
    let rank = m.rank(RANK_TOL)?;
    if rank > 3 {
        return Err(Error::RankMismatch {
            expected: 3,
            found: rank,
        });
    }
    let (p, q) = (m.rows(), m.cols());
    let scale = m.max_entry();
    let cut = 1e-14 * scale;
    let dense = m.as_dense();
    let rows: Vec<usize> = (0..p)
        .filter(|&i| dense.row(i).iter().any(|&x| x > cut))
        .collect();
    let cols: Vec<usize> = (0..q)
        .filter(|&j| (0..p).any(|i| dense.get(i, j) > cut))
        .collect();
    if rows.is_empty() {
        let z = SymMatrix::zeros(1);
        let mut out = PsdFactorization::new(1, vec![z.clone(); p], vec![z; q])?;
        out.residual = 0.0;
        return Ok(out);
    }
    let core = NonnegMatrix::new(dense.select_rows(&rows).select_cols(&cols))?;
    let transposed = core.cols() > core.rows();
    let work = if transposed {
        core.transpose()
    } else {
        core.clone()
    };

    let mut acc: Option<PsdFactorization> = None;
    let ncols = work.cols();
    for (chunk, start) in (0..ncols).step_by(CHUNK).enumerate() {
        let idx: Vec<usize> = (start..(start + CHUNK).min(ncols)).collect();
        let sub = work.select_cols(&idx);
        let f = if idx.len() <= 4 {
            diagonal_factorization(&sub)
        } else {
            let chunk_cfg = SearchConfig {
                rng_seed: cfg.rng_seed.wrapping_add(chunk as u64),
                ..cfg.clone()
            };
            search_factorization(&sub, 4, &chunk_cfg).ok_or(Error::SearchFailed(chunk))?
        };
        debug!(
            "rank-3 chunk {chunk}: {} columns, size {}",
            idx.len(),
            f.k()
        );
        acc = Some(match acc {
            None => f,
            Some(prev) => concat_factorizations(&prev, &f)?,
        });
    }
    let f = acc.expect("at least one chunk");
    let f = if transposed {
        transpose_factorization(&f)
    } else {
        f
    };
    let f = embed_factorization(&f, &rows, &cols, (p, q))?;
    let report = verify_factorization(m, &f, cfg.tol * scale)?;
    if !report.pass {
        return Err(Error::VerificationFailed(report.max_residual));
    }
    let mut f = f;
    f.residual = report.max_residual;
    Ok(f)
}
