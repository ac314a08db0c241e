//! General-`k` system: `M = U V` of rank `d = k(k+1)/2` has psd rank `k` iff
//! there are `L K = I` with `smat(K u_i) ⪰ 0` and `smat(L^T v_j) ⪰ 0`.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyform::NonnegMatrix;
use crate::psdfact::{
    embed_factorization, scale_factorization, search_factorization, verify_factorization,
    PsdFactorization, SearchConfig,
};
use crate::symcore::{
    lstsq, min_eig, project_psd, rank_factor, smat, svec, svec_len, DenseMatrix, SymMatrix,
    RANK_TOL,
};

/// Tolerance used when verifying bilinear certificates.
pub const BILINEAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearCertificate {
    #[serde(rename = "L")]
    pub l: DenseMatrix,
    #[serde(rename = "K")]
    pub k: DenseMatrix,
}

/// Rank factorization of the stripped, row-normalized matrix together with
/// what is needed to map results back to the input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BilinearSystem {
    pub k: usize,
    pub d: usize,
    #[serde(rename = "U")]
    pub u: DenseMatrix,
    #[serde(rename = "V")]
    pub v: DenseMatrix,
    pub row_scalings: Vec<f64>,
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
    pub source_shape: (usize, usize),
}

impl BilinearSystem {
    /// Entries of `L` and `K`.
    pub fn num_unknowns(&self) -> usize {
        2 * self.d * self.d
    }

    /// Scalar equations of `L K = I`.
    pub fn num_equations(&self) -> usize {
        self.d * self.d
    }

    /// One `k x k` condition per row of `U` and per column of `V`.
    pub fn num_psd_conditions(&self) -> usize {
        self.u.rows() + self.v.cols()
    }

    /// The matrix `U V` the system describes.
    pub fn normalized(&self) -> Result<NonnegMatrix> {
        let uv = self.u.matmul(&self.v);
        NonnegMatrix::new(DenseMatrix::from_fn(uv.rows(), uv.cols(), |i, j| {
            uv.get(i, j).max(0.0)
        }))
    }
}

pub fn build_bilinear_system(m: &NonnegMatrix, k: usize) -> Result<BilinearSystem> {
    if k == 0 {
        return Err(Error::DomainError("k must be positive".into()));
    }
    let d = svec_len(k);
    let rank = m.rank(RANK_TOL)?;
    if rank != d {
        return Err(Error::RankMismatch {
            expected: d,
            found: rank,
        });
    }
    let dense = m.as_dense();
    let (p, q) = (dense.rows(), dense.cols());
    let cut = 1e-14 * m.max_entry();
    let kept_rows: Vec<usize> = (0..p)
        .filter(|&i| dense.row(i).iter().any(|&x| x > cut))
        .collect();
    let kept_cols: Vec<usize> = (0..q)
        .filter(|&j| (0..p).any(|i| dense.get(i, j) > cut))
        .collect();
    let stripped = dense.select_rows(&kept_rows).select_cols(&kept_cols);
    let row_scalings: Vec<f64> = (0..stripped.rows())
        .map(|i| 1.0 / stripped.row(i).iter().sum::<f64>())
        .collect();
    let normalized = DenseMatrix::from_fn(stripped.rows(), stripped.cols(), |i, j| {
        stripped.get(i, j) * row_scalings[i]
    });
    let fac = rank_factor(&normalized, RANK_TOL, false)?;
    if fac.rank != d {
        return Err(Error::RankMismatch {
            expected: d,
            found: fac.rank,
        });
    }
    Ok(BilinearSystem {
        k,
        d,
        u: fac.u,
        v: fac.v,
        row_scalings,
        kept_rows,
        kept_cols,
        source_shape: (p, q),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearReport {
    /// `max |L K - I|`
    pub lk_residual: f64,
    /// `max |K L - I|`
    pub kl_residual: f64,
    /// Row index and smallest eigenvalue of the worst `smat(K u_i)`.
    pub worst_row: (usize, f64),
    /// Column index and smallest eigenvalue of the worst `smat(L^T v_j)`.
    pub worst_col: (usize, f64),
    pub pass: bool,
}

pub fn verify_bilinear(
    cert: &BilinearCertificate,
    sys: &BilinearSystem,
    tol: f64,
) -> Result<BilinearReport> {
    let d = sys.d;
    for (name, mat) in [("L", &cert.l), ("K", &cert.k)] {
        if mat.rows() != d || mat.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, system needs {d}x{d}",
                mat.rows(),
                mat.cols()
            )));
        }
    }
    let eye = DenseMatrix::identity(d);
    let lk_residual = cert.l.matmul(&cert.k).sub(&eye).max_abs();
    let kl_residual = cert.k.matmul(&cert.l).sub(&eye).max_abs();
    let mut worst_row = (0, f64::INFINITY);
    for i in 0..sys.u.rows() {
        let e = min_eig(&smat(&cert.k.mul_vec(sys.u.row(i)))?)?;
        if e < worst_row.1 {
            worst_row = (i, e);
        }
    }
    let lt = cert.l.transpose();
    let mut worst_col = (0, f64::INFINITY);
    for j in 0..sys.v.cols() {
        let e = min_eig(&smat(&lt.mul_vec(&sys.v.col(j)))?)?;
        if e < worst_col.1 {
            worst_col = (j, e);
        }
    }
    let pass =
        lk_residual <= tol && kl_residual <= tol && worst_row.1 >= -tol && worst_col.1 >= -tol;
    Ok(BilinearReport {
        lk_residual,
        kl_residual,
        worst_row,
        worst_col,
        pass,
    })
}

/// Local search for a certificate. A size-`k` factorization of `U V` is
/// searched first; `K` is then the unique solution of `svec(A_i) = K u_i`
/// and `L = K^{-1}`. `None` is not a proof that none exists.
pub fn solve_bilinear(sys: &BilinearSystem, cfg: &SearchConfig) -> Option<BilinearCertificate> {
    let target = sys.normalized().ok()?;
    let tight = SearchConfig {
        tol: cfg.tol.min(1e-11),
        ..cfg.clone()
    };
    let f = search_factorization(&target, sys.k, &tight)?;
    let sa = DenseMatrix::from_rows(&f.row_factors().iter().map(svec).collect::<Vec<_>>()).ok()?;
    // U K^T = [svec(A_i)]
    let mut kt = DenseMatrix::zeros(sys.d, sys.d);
    for c in 0..sys.d {
        let (col, _) = lstsq(&sys.u, &sa.col(c), RANK_TOL).ok()?;
        for r in 0..sys.d {
            kt.set(r, c, col[r]);
        }
    }
    let k = kt.transpose();
    let l = k.inverse()?;
    let cert = BilinearCertificate { l, k };
    let report = verify_bilinear(&cert, sys, BILINEAR_TOL).ok()?;
    debug!("solve_bilinear: {report:?}");
    report.pass.then_some(cert)
}

/// `A_i = smat(K u_i)`, `B_j = smat(L^T v_j)`, mapped back to the input
/// matrix (row scalings undone, zero rows and columns re-inserted).
pub fn certificate_to_factorization(
    cert: &BilinearCertificate,
    sys: &BilinearSystem,
) -> Result<PsdFactorization> {
    let report = verify_bilinear(cert, sys, BILINEAR_TOL)?;
    if !report.pass {
        return Err(Error::UnverifiedCertificate(format!(
            "LK residual {:e}, worst row eigenvalue {:e}, worst column eigenvalue {:e}",
            report.lk_residual, report.worst_row.1, report.worst_col.1
        )));
    }
    // eigenvalues down to -tol are clipped so the factors are psd
    let a = (0..sys.u.rows())
        .map(|i| project_psd(&smat(&cert.k.mul_vec(sys.u.row(i)))?))
        .collect::<Result<Vec<SymMatrix>>>()?;
    let lt = cert.l.transpose();
    let b = (0..sys.v.cols())
        .map(|j| project_psd(&smat(&lt.mul_vec(&sys.v.col(j)))?))
        .collect::<Result<Vec<SymMatrix>>>()?;
    let f = PsdFactorization::new(sys.k, a, b)?;
    let r: Vec<f64> = sys.row_scalings.iter().map(|s| 1.0 / s).collect();
    let ones = vec![1.0; sys.v.cols()];
    let f = scale_factorization(&f, &r, &ones)?;
    let mut f = embed_factorization(&f, &sys.kept_rows, &sys.kept_cols, sys.source_shape)?;
    f.residual = f64::INFINITY;
    Ok(f)
}

/// `certificate_to_factorization` followed by verification against `m` at
/// `1e-6 max M`.
pub fn extract_verified(
    cert: &BilinearCertificate,
    sys: &BilinearSystem,
    m: &NonnegMatrix,
) -> Result<PsdFactorization> {
    let f = certificate_to_factorization(cert, sys)?;
    let report = verify_factorization(m, &f, 1e-6 * m.max_entry())?;
    if !report.pass {
        return Err(Error::VerificationFailed(report.max_residual));
    }
    let mut f = f;
    f.residual = report.max_residual;
    Ok(f)
}
