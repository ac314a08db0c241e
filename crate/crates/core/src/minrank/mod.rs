//! MIN PSD RANK: given `M` of rank `k(k+1)/2`, is its psd rank `k`?
//!
//! `k = 2` is decided exactly by fitting an ellipse between the polygons of
//! the nested pair. Other `k` use a local search whose Yes answers carry a
//! verified certificate; its failures are reported as `NotFound`.

mod bilinear;
mod conic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyform::NonnegMatrix;
use crate::psdfact::{PsdFactorization, SearchConfig};
use crate::symcore::{svec_len, SymMatrix, RANK_TOL};

pub use bilinear::{
    build_bilinear_system, certificate_to_factorization, extract_verified, solve_bilinear,
    verify_bilinear, BilinearCertificate, BilinearReport, BilinearSystem, BILINEAR_TOL,
};
pub use conic::{
    build_conic_system, conic_to_factorization, conic_violation, decide_rank2, decide_rank2_with,
    facet_matrix, ConicCertificate, ConicSystem, CONIC_TOL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Certificate {
    Conic(ConicCertificate),
    Bilinear(BilinearCertificate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "answer")]
pub enum Answer {
    Yes {
        certificate: Certificate,
    },
    /// Per-block Farkas ray of the conic system.
    NoCertified {
        ray: Vec<SymMatrix>,
    },
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(flatten)]
    pub answer: Answer,
    /// Verified size-`k` factorization of the input, present on Yes.
    pub factorization: Option<PsdFactorization>,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    pub fn not_found(diagnostics: Vec<String>) -> Self {
        Verdict {
            answer: Answer::NotFound,
            factorization: None,
            diagnostics,
        }
    }

    pub fn is_yes(&self) -> bool {
        matches!(self.answer, Answer::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self.answer, Answer::NoCertified { .. })
    }

    pub fn label(&self) -> &'static str {
        match self.answer {
            Answer::Yes { .. } => "Yes",
            Answer::NoCertified { .. } => "NoCertified",
            Answer::NotFound => "NotFound",
        }
    }
}

/// Decides whether `rank_psd(M) = k` for `M` of rank `k(k+1)/2`.
pub fn min_psd_rank_decide(m: &NonnegMatrix, k: usize, cfg: &SearchConfig) -> Result<Verdict> {
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
    let mut diagnostics = Vec::new();
    if k == 2 {
        let v = decide_rank2(m)?;
        if v.is_yes() || v.is_no() {
            return Ok(v);
        }
        diagnostics.extend(v.diagnostics);
        diagnostics.push("conic decision inconclusive, trying the bilinear search".into());
    }
    let sys = build_bilinear_system(m, k)?;
    diagnostics.push(format!(
        "method: bilinear search, {} unknowns, {} equations, {} psd conditions",
        sys.num_unknowns(),
        sys.num_equations(),
        sys.num_psd_conditions()
    ));
    let Some(cert) = solve_bilinear(&sys, cfg) else {
        diagnostics.push(format!("no certificate after {} restarts", cfg.restarts));
        return Ok(Verdict::not_found(diagnostics));
    };
    match extract_verified(&cert, &sys, m) {
        Ok(f) => Ok(Verdict {
            answer: Answer::Yes {
                certificate: Certificate::Bilinear(cert),
            },
            factorization: Some(f),
            diagnostics,
        }),
        Err(e) => {
            diagnostics.push(format!("certificate found but extraction failed: {e}"));
            Ok(Verdict::not_found(diagnostics))
        }
    }
}

#[cfg(test)]
mod tests;
