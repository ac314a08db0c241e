//! Closed-form psd-rank bounds and a bracket report for a given matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minrank::{decide_rank2, Verdict};
use crate::polyform::NonnegMatrix;
use crate::psdfact::{
    diagonal_factorization, search_factorization, verify_factorization, PsdFactorization,
    SearchConfig,
};
use crate::symcore::RANK_TOL;

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Smallest `k` with `k(k+1)/2 >= r`.
pub fn dim_count_lower(r: u64) -> Result<u64> {
    if r < 1 {
        return Err(Error::DomainError("rank must be at least 1".into()));
    }
    let mut k = (((1.0 + 8.0 * r as f64).sqrt() - 1.0) / 2.0).floor() as u64;
    // repair any floating-point slack in either direction
    while k > 0 && (k - 1) * k / 2 >= r {
        k -= 1;
    }
    while k * (k + 1) / 2 < r {
        k += 1;
    }
    Ok(k)
}

/// Smallest integer `k` with `k^4 >= n v`.
pub fn generic_lower(n: u64, v: u64) -> Result<u64> {
    if n < 1 || v < n + 1 {
        return Err(Error::DomainError(format!(
            "generic bound needs n >= 1 and v >= n + 1, got n = {n}, v = {v}"
        )));
    }
    let nv = n as u128 * v as u128;
    let mut k = (nv as f64).powf(0.25).floor() as u128;
    while k > 0 && (k - 1).pow(4) >= nv {
        k -= 1;
    }
    while k.pow(4) < nv {
        k += 1;
    }
    Ok(k as u64)
}

/// `min(4 ceil(v/6), v)` for a `v`-gon.
pub fn polygon_upper(v: u64) -> Result<u64> {
    if v < 3 {
        return Err(Error::DomainError(format!(
            "a polygon has at least 3 vertices, got {v}"
        )));
    }
    Ok((4 * ceil_div(v, 6)).min(v))
}

/// `min(4 ceil(min(p,q)/6), min(p,q))` for a nonnegative rank-3 `p x q` matrix.
pub fn rank3_upper(p: u64, q: u64) -> Result<u64> {
    if p < 1 || q < 1 {
        return Err(Error::DomainError(format!(
            "matrix dimensions must be positive, got {p}x{q}"
        )));
    }
    let s = p.min(q);
    Ok((4 * ceil_div(s, 6)).min(s))
}

/// `ceil(6v/7)`: nonnegative rank of a `v`-gon, for comparison only.
pub fn nn_rank_polygon_upper_info(v: u64) -> Result<u64> {
    if v < 3 {
        return Err(Error::DomainError(format!(
            "a polygon has at least 3 vertices, got {v}"
        )));
    }
    Ok(ceil_div(6 * v, 7))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: u64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub rank: usize,
    pub lower: Bound,
    pub upper: Bound,
    pub notes: Vec<String>,
}

impl BoundsReport {
    pub fn pinned(&self) -> bool {
        self.lower.value == self.upper.value
    }

    fn raise_lower(&mut self, value: u64, source: &str) {
        if value > self.lower.value {
            self.lower = Bound {
                value,
                source: source.into(),
            };
        }
    }

    fn lower_upper(&mut self, value: u64, source: &str) {
        if value < self.upper.value {
            self.upper = Bound {
                value,
                source: source.into(),
            };
        }
    }

    /// Tightens the upper bound with a factorization that verifies against `m`.
    pub fn with_factorization(mut self, m: &NonnegMatrix, f: &PsdFactorization) -> Result<Self> {
        let report = verify_factorization(m, f, 1e-6 * m.max_entry())?;
        if report.pass {
            self.lower_upper(f.k() as u64, "verified psd factorization");
        } else {
            self.notes.push(format!(
                "size-{} factorization ignored: residual {:e}",
                f.k(),
                report.max_residual
            ));
        }
        Ok(self)
    }

    /// Uses a MIN PSD RANK verdict at `k`: Yes pins the rank at `k`; a
    /// certified No at `k = 2` raises the lower bound to 3.
    pub fn with_verdict(mut self, m: &NonnegMatrix, k: usize, v: &Verdict) -> Result<Self> {
        if v.is_yes() {
            self.raise_lower(k as u64, "MIN PSD RANK certificate");
            if let Some(f) = &v.factorization {
                self = self.with_factorization(m, f)?;
            }
        } else if v.is_no() {
            self.raise_lower(k as u64 + 1, "certified infeasibility of the conic system");
        }
        Ok(self)
    }
}

/// Bounds from the calculators alone: dimension counting, the rank-3 upper
/// bound and the trivial diagonal factorization.
pub fn bracket(m: &NonnegMatrix) -> Result<BoundsReport> {
    let rank = m.rank(RANK_TOL)?;
    let (p, q) = (m.rows() as u64, m.cols() as u64);
    if rank == 0 {
        let zero = Bound {
            value: 0,
            source: "zero matrix".into(),
        };
        return Ok(BoundsReport {
            rank,
            lower: zero.clone(),
            upper: zero,
            notes: vec![],
        });
    }
    let mut report = BoundsReport {
        rank,
        lower: Bound {
            value: dim_count_lower(rank as u64)?,
            source: "dimension count".into(),
        },
        upper: Bound {
            value: p.min(q),
            source: "diagonal factorization".into(),
        },
        notes: vec![],
    };
    if rank == 3 {
        report.lower_upper(rank3_upper(p, q)?, "rank-3 bound 4 ceil(min(p,q)/6)");
    }
    if rank <= 2 {
        report
            .notes
            .push("rank at most 2: psd rank equals rank".into());
        report.lower_upper(rank as u64, "rank at most 2");
    }
    Ok(report)
}

/// [`bracket`], then the exact `k = 2` decision when the rank is 3, then
/// factorization searches for sizes strictly between the bounds.
pub fn bracket_full(m: &NonnegMatrix, cfg: &SearchConfig) -> Result<BoundsReport> {
    let mut report = bracket(m)?;
    if report.pinned() {
        return Ok(report);
    }
    if report.rank == 3 {
        let v = decide_rank2(m)?;
        report.notes.push(format!("rank-2 decision: {}", v.label()));
        report = report.with_verdict(m, 2, &v)?;
    }
    if report.upper.value as usize == m.cols().min(m.rows()) {
        let diag = if m.cols() <= m.rows() {
            diagonal_factorization(m)
        } else {
            crate::psdfact::transpose_factorization(&diagonal_factorization(&m.transpose()))
        };
        report = report.with_factorization(m, &diag)?;
    }
    let mut k = report.lower.value as usize;
    while (k as u64) < report.upper.value {
        if let Some(f) = search_factorization(m, k, cfg) {
            report = report.with_factorization(m, &f)?;
            break;
        }
        report.notes.push(format!(
            "no size-{k} factorization found (not a lower bound)"
        ));
        k += 1;
    }
    if report.lower.value > report.upper.value {
        return Err(Error::DomainError(format!(
            "inconsistent bounds {} > {}",
            report.lower.value, report.upper.value
        )));
    }
    Ok(report)
}
