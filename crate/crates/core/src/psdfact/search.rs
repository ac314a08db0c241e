//! Numeric search for size-`k` psd factorizations.
//!
//! Each restart runs a short block-coordinate projected gradient on the
//! factors `A_i`, `B_j`, then polishes with Levenberg-Marquardt on `k x w`
//! square roots `A_i = X_i X_i^T`, `B_j = Y_j Y_j^T`, where the residuals are
//! smooth and the factors stay psd by construction.

use log::{debug, trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{verify_factorization, PsdFactorization};
use crate::polyform::NonnegMatrix;
use crate::symcore::{eig_sym, project_psd, DenseMatrix, SymMatrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Levenberg-Marquardt iterations per restart.
    pub max_iters: usize,
    /// Projected-gradient sweeps before the polish.
    pub pg_iters: usize,
    /// Acceptance tolerance relative to `max M_ij`.
    pub tol: f64,
    pub rng_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 32,
            max_iters: 400,
            pg_iters: 40,
            tol: 1e-6,
            rng_seed: 0,
            jobs: 0,
        }
    }
}

/// Runs up to `cfg.restarts` independent attempts and returns the first (in
/// restart order) verified factorization. `None` is not a lower bound.
pub fn search_factorization(
    m: &NonnegMatrix,
    k: usize,
    cfg: &SearchConfig,
) -> Option<PsdFactorization> {
    let (p, q) = (m.rows(), m.cols());
    if k == 0 || p == 0 || q == 0 || cfg.restarts == 0 {
        return None;
    }
    let scale = m.max_entry();
    if scale == 0.0 {
        let z = SymMatrix::zeros(k);
        let mut f = PsdFactorization::new(k, vec![z.clone(); p], vec![z; q]).ok()?;
        f.residual = 0.0;
        return Some(f);
    }
    let mhat = m.as_dense().scaled(1.0 / scale);
    let abs_tol = cfg.tol * scale;
    let run = |r: usize| -> Option<PsdFactorization> {
        let (a, b) = attempt(&mhat, k, cfg, r)?;
        let a = a.into_iter().map(|x| x.scaled(scale)).collect();
        let f = PsdFactorization::new(k, a, b).ok()?;
        let report = verify_factorization(m, &f, abs_tol).ok()?;
        trace!("restart {r}: residual {:e}", report.max_residual);
        if report.pass {
            let mut f = f;
            f.residual = report.max_residual;
            debug!("search k={k}: success at restart {r}");
            Some(f)
        } else {
            None
        }
    };
    let go = || (0..cfg.restarts).into_par_iter().find_map_first(run);
    let found = if cfg.jobs > 0 {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
        {
            Ok(pool) => pool.install(go),
            Err(_) => go(),
        }
    } else {
        go()
    };
    if found.is_none() {
        debug!(
            "search k={k}: no factorization after {} restarts",
            cfg.restarts
        );
    }
    found
}

fn gaussian(rng: &mut ChaCha8Rng, p: usize, q: usize) -> DenseMatrix {
    DenseMatrix::from_fn(p, q, |_, _| StandardNormal.sample(rng))
}

fn gram(x: &DenseMatrix) -> SymMatrix {
    SymMatrix::symmetrize(&x.matmul(&x.transpose()))
}

/// `k x r` factor `X` with `X X^T` the best rank-`r` psd approximation of `S`.
fn psd_sqrt(s: &SymMatrix, r: usize) -> Option<DenseMatrix> {
    let e = eig_sym(s).ok()?;
    let k = s.dim();
    // eigenvalues ascend, keep the top r
    Some(DenseMatrix::from_fn(k, r, |i, j| {
        let t = k - r + j;
        e.vectors.get(i, t) * e.values[t].max(0.0).sqrt()
    }))
}

fn attempt(
    m: &DenseMatrix,
    k: usize,
    cfg: &SearchConfig,
    restart: usize,
) -> Option<(Vec<SymMatrix>, Vec<SymMatrix>)> {
    // Even restarts fit rank-ceil(k/2) square roots, which suits slack
    // matrices with many zeros; odd restarts use full rank.
    let w = if restart % 2 == 0 { k.div_ceil(2) } else { k };
    let lm = polish_from_start(m, k, w, cfg, restart)?;
    trace!(
        "restart {restart} (width {w}): LM stopped at {:e} after {} iterations",
        lm.max_residual,
        lm.iterations
    );
    (lm.max_residual <= LM_TARGET * cfg.tol).then(|| {
        (
            lm.xs.iter().map(gram).collect(),
            lm.ys.iter().map(gram).collect(),
        )
    })
}

fn polish_from_start(
    m: &DenseMatrix,
    k: usize,
    w: usize,
    cfg: &SearchConfig,
    restart: usize,
) -> Option<LmOutcome> {
    let (p, q) = (m.rows(), m.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(restart as u64);

    // Wishart start, scaled so the mean of <A_i, B_j> matches the mean of M.
    let mut a: Vec<SymMatrix> = (0..p).map(|_| gram(&gaussian(&mut rng, k, k))).collect();
    let mut b: Vec<SymMatrix> = (0..q).map(|_| gram(&gaussian(&mut rng, k, k))).collect();
    let mean_m = m.as_slice().iter().sum::<f64>() / (p * q) as f64;
    let mean_r = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| x.inner(y)))
        .sum::<f64>()
        / (p * q) as f64;
    if mean_r > 0.0 {
        let c = (mean_m / mean_r).sqrt();
        a.iter_mut().for_each(|x| *x = x.scaled(c));
        b.iter_mut().for_each(|y| *y = y.scaled(c));
    }

    for _ in 0..cfg.pg_iters {
        pg_sweep(m, &mut a, &b, false)?;
        pg_sweep(m, &mut b, &a, true)?;
    }

    let xs: Vec<DenseMatrix> = a.iter().map(|x| psd_sqrt(x, w)).collect::<Option<_>>()?;
    let ys: Vec<DenseMatrix> = b.iter().map(|y| psd_sqrt(y, w)).collect::<Option<_>>()?;
    Some(levenberg_marquardt(
        m,
        xs,
        ys,
        cfg.max_iters,
        LM_TARGET * cfg.tol,
    ))
}

/// One projected-gradient pass over `own` with `other` fixed. With
/// `transposed`, `own` indexes the columns of `m`.
fn pg_sweep(
    m: &DenseMatrix,
    own: &mut [SymMatrix],
    other: &[SymMatrix],
    transposed: bool,
) -> Option<()> {
    let lip: f64 = other.iter().map(|y| y.inner(y)).sum();
    if !(lip > 0.0) {
        return Some(());
    }
    for (i, x) in own.iter_mut().enumerate() {
        let mut grad = SymMatrix::zeros(x.dim());
        for (j, y) in other.iter().enumerate() {
            let target = if transposed { m.get(j, i) } else { m.get(i, j) };
            grad.axpy(x.inner(y) - target, y);
        }
        let mut next = x.clone();
        next.axpy(-1.0 / lip, &grad);
        *x = project_psd(&next).ok()?;
    }
    Some(())
}

/// Fraction of the acceptance tolerance the polish aims for, leaving room for
/// the rescaling to the original entries.
const LM_TARGET: f64 = 0.5;

/// Entries at or below this (after scaling to max 1) are fitted as zeros.
const ZERO_ENTRY: f64 = 1e-12;

/// Jacobian stored as sparse rows of `(variable, value)`.
type SparseRows = Vec<Vec<(usize, f64)>>;

/// Residual vector and optional Jacobian of the least-squares system.
///
/// A positive entry contributes `|X_i^T Y_j|_F^2 - M_ij`. A zero entry
/// contributes the whole matrix `X_i^T Y_j`: the squared form has a vanishing
/// gradient at every solution, which makes Gauss-Newton crawl.
fn system(
    m: &DenseMatrix,
    xs: &[DenseMatrix],
    ys: &[DenseMatrix],
    with_jac: bool,
) -> (Vec<f64>, Option<SparseRows>) {
    let (p, q) = (m.rows(), m.cols());
    let (k, w) = (xs[0].rows(), xs[0].cols());
    let kw = k * w;
    let mut r = Vec::new();
    let mut rows: SparseRows = Vec::new();
    let xts: Vec<DenseMatrix> = xs.iter().map(DenseMatrix::transpose).collect();
    for i in 0..p {
        for j in 0..q {
            let prod = xts[i].matmul(&ys[j]);
            if m.get(i, j) <= ZERO_ENTRY {
                for a in 0..w {
                    for b in 0..w {
                        r.push(prod.get(a, b));
                        if with_jac {
                            // d/dX_{ca} = Y_{cb}, d/dY_{cb} = X_{ca}
                            let mut row = Vec::with_capacity(2 * k);
                            for c in 0..k {
                                row.push((i * kw + c * w + a, ys[j].get(c, b)));
                                row.push(((p + j) * kw + c * w + b, xs[i].get(c, a)));
                            }
                            rows.push(row);
                        }
                    }
                }
            } else {
                r.push(prod.as_slice().iter().map(|v| v * v).sum::<f64>() - m.get(i, j));
                if with_jac {
                    // gradient 2 Y_j (X_i^T Y_j)^T in X_i, 2 X_i (X_i^T Y_j) in Y_j
                    let gx = ys[j].matmul(&prod.transpose());
                    let gy = xs[i].matmul(&prod);
                    let mut row = Vec::with_capacity(2 * kw);
                    for t in 0..kw {
                        row.push((i * kw + t, 2.0 * gx.as_slice()[t]));
                        row.push(((p + j) * kw + t, 2.0 * gy.as_slice()[t]));
                    }
                    rows.push(row);
                }
            }
        }
    }
    (r, with_jac.then_some(rows))
}

/// Gauss-Newton matrix and right-hand side in the smaller of the two
/// spaces: `(J J^T, r)` when there are no more residuals than variables,
/// else `(J^T J, J^T r)`. The flag reports the former.
fn normal_system(rows: &SparseRows, r: &[f64], nvar: usize) -> (DenseMatrix, Vec<f64>, bool) {
    let nres = rows.len();
    if nres <= nvar {
        let mut cols: SparseRows = vec![Vec::new(); nvar];
        for (u, row) in rows.iter().enumerate() {
            for &(v, x) in row {
                cols[v].push((u, x));
            }
        }
        (outer_sum(&cols, nres), r.to_vec(), true)
    } else {
        let mut rhs = vec![0.0; nvar];
        for (row, &ru) in rows.iter().zip(r) {
            for &(v, x) in row {
                rhs[v] += x * ru;
            }
        }
        (outer_sum(rows, nvar), rhs, false)
    }
}

/// `sum_t a_t a_t^T` over sparse vectors of length `n`.
fn outer_sum(vecs: &SparseRows, n: usize) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(n, n);
    for a in vecs {
        for &(u, x) in a {
            for &(v, y) in a {
                g.set(u, v, g.get(u, v) + x * y);
            }
        }
    }
    g
}

/// Solves `G z = b` for positive definite `G` by Cholesky.
fn spd_solve(g: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let l = g.cholesky()?;
    let n = b.len();
    let mut z = b.to_vec();
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = row[..i].iter().zip(&z[..i]).map(|(a, b)| a * b).sum();
        z[i] = (z[i] - s) / row[i];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|t| l.get(t, i) * z[t]).sum();
        z[i] = (z[i] - s) / l.get(i, i);
    }
    Some(z)
}

/// `J^T z` for sparse rows.
fn transpose_apply(rows: &SparseRows, z: &[f64], nvar: usize) -> Vec<f64> {
    let mut out = vec![0.0; nvar];
    for (row, &zu) in rows.iter().zip(z) {
        for &(v, x) in row {
            out[v] += x * zu;
        }
    }
    out
}

/// `max |M_ij - |X_i^T Y_j|_F^2|`
fn max_entry_error(m: &DenseMatrix, xs: &[DenseMatrix], ys: &[DenseMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let xt = x.transpose();
        for (j, y) in ys.iter().enumerate() {
            let v: f64 = xt.matmul(y).as_slice().iter().map(|v| v * v).sum();
            worst = worst.max((v - m.get(i, j)).abs());
        }
    }
    worst
}

struct LmOutcome {
    xs: Vec<DenseMatrix>,
    ys: Vec<DenseMatrix>,
    max_residual: f64,
    iterations: usize,
}

fn levenberg_marquardt(
    m: &DenseMatrix,
    mut xs: Vec<DenseMatrix>,
    mut ys: Vec<DenseMatrix>,
    max_iters: usize,
    target: f64,
) -> LmOutcome {
    let (p, q) = (m.rows(), m.cols());
    let (k, w) = (xs[0].rows(), xs[0].cols());
    let kw = k * w;
    let nvar = (p + q) * kw;

    // balance the global scale between the two sides
    let sx: f64 = xs.iter().map(|x| x.frobenius().powi(2)).sum();
    let sy: f64 = ys.iter().map(|y| y.frobenius().powi(2)).sum();
    if sx > 0.0 && sy > 0.0 {
        let c = (sy / sx).powf(0.25);
        xs.iter_mut().for_each(|x| *x = x.scaled(c));
        ys.iter_mut().for_each(|y| *y = y.scaled(1.0 / c));
    }

    let mut r = system(m, &xs, &ys, false).0;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut err = max_entry_error(m, &xs, &ys);
    let mut lambda = 1e-3;
    let mut checkpoint = cost;
    let mut iterations = 0;
    for it in 0..max_iters {
        iterations = it;
        if err <= target {
            break;
        }
        if it > 0 && it % 25 == 0 {
            // stalled in a local minimum
            if cost > 0.9 * checkpoint {
                break;
            }
            checkpoint = cost;
        }
        let jac = system(m, &xs, &ys, true).1.expect("jacobian requested");
        let (gram_mat, rhs, dual) = normal_system(&jac, &r, nvar);
        let n = gram_mat.rows();
        let mut improved = false;
        for _ in 0..12 {
            let damped = DenseMatrix::from_fn(n, n, |u, v| {
                gram_mat.get(u, v)
                    + if u == v {
                        lambda * (1.0 + gram_mat.get(u, u))
                    } else {
                        0.0
                    }
            });
            let Some(z) = spd_solve(&damped, &rhs) else {
                lambda *= 10.0;
                continue;
            };
            let step = if dual {
                transpose_apply(&jac, &z, nvar)
            } else {
                z
            };
            let shift = |mats: &[DenseMatrix], offset: usize| -> Vec<DenseMatrix> {
                mats.iter()
                    .enumerate()
                    .map(|(i, x)| {
                        DenseMatrix::from_fn(k, w, |u, v| {
                            x.get(u, v) - step[(offset + i) * kw + u * w + v]
                        })
                    })
                    .collect()
            };
            let nx = shift(&xs, 0);
            let ny = shift(&ys, p);
            let nr = system(m, &nx, &ny, false).0;
            let ncost: f64 = nr.iter().map(|v| v * v).sum();
            if ncost.is_finite() && ncost < cost {
                xs = nx;
                ys = ny;
                r = nr;
                cost = ncost;
                err = max_entry_error(m, &xs, &ys);
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved || lambda > 1e12 {
            break;
        }
    }
    LmOutcome {
        max_residual: err,
        xs,
        ys,
        iterations,
    }
}
