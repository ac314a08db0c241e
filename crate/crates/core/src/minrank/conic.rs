//! Exact `k = 2` decision: an ellipse between the polygons `P ⊆ Q` of the
//! nested pair, written as an LMI system with one S-procedure multiplier per
//! facet of `Q`.

use log::debug;
use serde::{Deserialize, Serialize};

use super::{Answer, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::liftkit::{factorization_from_lift, SpectraLift};
use crate::lmifeas::{self, verify_ray, FeasStatus, LmiProblem, SolveOptions};
use crate::polyform::{is_bounded, pair_from_matrix, NestedPair, NonnegMatrix};
use crate::psdfact::{denormalize, verify_factorization, PsdFactorization};
use crate::symcore::{min_eig, DenseMatrix, SymMatrix, RANK_TOL};

/// Tolerance used when re-verifying conic certificates.
pub const CONIC_TOL: f64 = 1e-9;

/// Quadratic `q(x) = [x;1]^T omega [x;1]` with `omega_33 = -1`, and one
/// multiplier per facet of `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicCertificate {
    pub omega: SymMatrix,
    pub mu: Vec<f64>,
}

impl ConicCertificate {
    /// From the solver variables `(w11, w22, w12, w13, w23, mu_1, ...)`.
    pub fn from_vars(y: &[f64]) -> Self {
        let omega = SymMatrix::from_rows(&[
            vec![y[0], y[2], y[3]],
            vec![y[2], y[1], y[4]],
            vec![y[3], y[4], -1.0],
        ])
        .expect("3x3 rows");
        ConicCertificate {
            omega,
            mu: y[5..].to_vec(),
        }
    }

    /// `q(x)`
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.omega.quad_form(&[x[0], x[1], 1.0])
    }
}

/// The LMI system and whether its answer is exact.
#[derive(Debug, Clone)]
pub struct ConicSystem {
    pub problem: LmiProblem,
    /// Infeasibility only proves psd rank > 2 when `Q` is bounded.
    pub q_bounded: bool,
}

/// `H_j = [[0, -c/2], [-c^T/2, d]]` for the facet `c^T x <= d`.
pub fn facet_matrix(c: &[f64], d: f64) -> SymMatrix {
    SymMatrix::from_rows(&[
        vec![0.0, 0.0, -c[0] / 2.0],
        vec![0.0, 0.0, -c[1] / 2.0],
        vec![-c[0] / 2.0, -c[1] / 2.0, d],
    ])
    .expect("3x3 rows")
}

fn unit3(i: usize, j: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(3);
    m.set(i, j, 1.0);
    m
}

/// Variables `w11, w22, w12, w13, w23` (free entries of `omega`) and
/// `mu_1..mu_q`. Blocks: upper-left `2x2` of `omega` psd; `-q(p_i) >= 0` per
/// vertex; `omega + mu_j H_j ⪰ 0` per facet; `mu_j >= 0`.
pub fn build_conic_system(pair: &NestedPair) -> Result<ConicSystem> {
    if pair.inner.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "conic system needs planar polygons, got dimension {}",
            pair.inner.dim()
        )));
    }
    let nq = pair.outer.len();
    let m = 5 + nq;
    let mut prob = LmiProblem::new(m);

    let ul = |i: usize, j: usize| {
        let mut s = SymMatrix::zeros(2);
        s.set(i, j, 1.0);
        s
    };
    prob.add_block_sparse(
        SymMatrix::zeros(2),
        vec![(0, ul(0, 0)), (1, ul(1, 1)), (2, ul(0, 1))],
    )?;

    for v in pair.inner.vertices() {
        let (x, y) = (v[0], v[1]);
        let mut coeffs = vec![0.0; m];
        coeffs[..5].copy_from_slice(&[-x * x, -y * y, -2.0 * x * y, -2.0 * x, -2.0 * y]);
        prob.add_scalar(1.0, &coeffs)?;
    }

    let omega_terms = || {
        vec![
            (0, unit3(0, 0)),
            (1, unit3(1, 1)),
            (2, unit3(0, 1)),
            (3, unit3(0, 2)),
            (4, unit3(1, 2)),
        ]
    };
    let mut f0 = SymMatrix::zeros(3);
    f0.set(2, 2, -1.0);
    for (j, ie) in pair.outer.inequalities().iter().enumerate() {
        let mut terms = omega_terms();
        terms.push((5 + j, facet_matrix(&ie.c, ie.d)));
        prob.add_block_sparse(f0.clone(), terms)?;
    }
    for j in 0..nq {
        let mut coeffs = vec![0.0; m];
        coeffs[5 + j] = 1.0;
        prob.add_scalar(0.0, &coeffs)?;
    }
    Ok(ConicSystem {
        problem: prob,
        q_bounded: is_bounded(&pair.outer)?,
    })
}

/// Re-checks a certificate against the pair directly (not through the LMI
/// encoding). Returns the worst violation; the certificate holds iff it is
/// `<= tol`.
pub fn conic_violation(cert: &ConicCertificate, pair: &NestedPair) -> Result<f64> {
    if cert.omega.dim() != 3 || cert.mu.len() != pair.outer.len() {
        return Err(Error::DimensionMismatch(
            "certificate does not match the pair".into(),
        ));
    }
    let mut worst = (cert.omega.get(2, 2) + 1.0).abs();
    let ul = SymMatrix::from_fn(2, |i, j| cert.omega.get(i, j));
    worst = worst.max(-min_eig(&ul)?);
    for v in pair.inner.vertices() {
        worst = worst.max(cert.eval(v));
    }
    for (ie, &mu) in pair.outer.inequalities().iter().zip(&cert.mu) {
        worst = worst.max(-mu);
        let mut blk = cert.omega.clone();
        blk.axpy(mu, &facet_matrix(&ie.c, ie.d));
        worst = worst.max(-min_eig(&blk)?);
    }
    Ok(worst.max(0.0))
}

/// Size-2 factorization of `S_{P,Q}` from an elliptic certificate: the
/// ellipse is mapped to the unit disk, whose pencil `[[1+x, y], [y, 1-x]]`
/// lifts it.
pub fn conic_to_factorization(
    cert: &ConicCertificate,
    pair: &NestedPair,
) -> Result<PsdFactorization> {
    let o = &cert.omega;
    let o11 = DenseMatrix::from_fn(2, 2, |i, j| o.get(i, j));
    let scale = o.max_abs().max(1.0);
    let ul = SymMatrix::from_fn(2, |i, j| o.get(i, j));
    if min_eig(&ul)? <= 1e-12 * scale {
        return Err(Error::NotStrictlyElliptic);
    }
    let w = [o.get(0, 2), o.get(1, 2)];
    let inv = o11.inverse().ok_or(Error::NotStrictlyElliptic)?;
    let iw = inv.mul_vec(&w);
    let center = [-iw[0], -iw[1]];
    let r2 = -o.get(2, 2) + w[0] * iw[0] + w[1] * iw[1];
    if !(r2 > 0.0) {
        return Err(Error::DomainError("conic has an empty interior".into()));
    }
    // (x - c)^T E (x - c) <= 1 with E = omega_11 / r2 = R^T R
    let e = o11.scaled(1.0 / r2);
    let l = e.cholesky().ok_or(Error::NotStrictlyElliptic)?;
    let r = l.transpose();
    let rinv = r.inverse().ok_or(Error::NotStrictlyElliptic)?;
    let disk = SpectraLift::disk();
    let lift = SpectraLift::new(disk.pencil().to_vec(), rinv)?;
    let neg = [-center[0], -center[1]];
    let inner = pair.inner.translated(&neg);
    let outer = pair.outer.translated(&center);
    factorization_from_lift(&lift, &inner, &outer)
}

/// Decides whether a nonnegative rank-3 matrix has psd rank 2.
pub fn decide_rank2(m: &NonnegMatrix) -> Result<Verdict> {
    decide_rank2_with(m, &SolveOptions::default())
}

pub fn decide_rank2_with(m: &NonnegMatrix, opts: &SolveOptions) -> Result<Verdict> {
    let rank = m.rank(RANK_TOL)?;
    if rank != 3 {
        return Err(Error::RankMismatch {
            expected: 3,
            found: rank,
        });
    }
    let pair = pair_from_matrix(m)?;
    let sys = build_conic_system(&pair)?;
    let res = lmifeas::solve(&sys.problem, opts);
    let mut diagnostics = vec![
        format!("method: conic S-procedure, {} iterations", res.iterations),
        format!("margin: {:e}", res.margin),
    ];
    if !sys.q_bounded {
        diagnostics.push("outer polygon unbounded: a No answer cannot be certified".into());
    }
    debug!("decide_rank2: margin {:e}", res.margin);
    match res.status {
        FeasStatus::Feasible(y) => {
            let cert = ConicCertificate::from_vars(&y);
            let viol = conic_violation(&cert, &pair)?;
            if viol > CONIC_TOL {
                diagnostics.push(format!(
                    "certificate rejected on re-verification ({viol:e})"
                ));
                return Ok(Verdict::not_found(diagnostics));
            }
            match conic_to_factorization(&cert, &pair).and_then(|f| denormalize(&f, &pair)) {
                Ok(f) => {
                    let report = verify_factorization(m, &f, 1e-8 * m.max_entry())?;
                    if !report.pass {
                        diagnostics.push(format!(
                            "extracted factorization residual {:e} too large",
                            report.max_residual
                        ));
                        return Ok(Verdict::not_found(diagnostics));
                    }
                    let mut f = f;
                    f.residual = report.max_residual;
                    Ok(Verdict {
                        answer: Answer::Yes {
                            certificate: Certificate::Conic(cert),
                        },
                        factorization: Some(f),
                        diagnostics,
                    })
                }
                Err(e) => {
                    diagnostics.push(format!("factorization extraction failed: {e}"));
                    Ok(Verdict::not_found(diagnostics))
                }
            }
        }
        FeasStatus::Infeasible(z) => {
            if !verify_ray(&sys.problem, &z, lmifeas::SolveOptions::default().tol)? {
                diagnostics.push("dual ray rejected on re-verification".into());
                return Ok(Verdict::not_found(diagnostics));
            }
            if !sys.q_bounded {
                return Ok(Verdict::not_found(diagnostics));
            }
            Ok(Verdict {
                answer: Answer::NoCertified { ray: z },
                factorization: None,
                diagnostics,
            })
        }
        FeasStatus::Undetermined => Ok(Verdict::not_found(diagnostics)),
    }
}
