//! Margin maximization `max t s.t. F_b(y) ⪰ t I` by a primal-dual
//! interior-point method (HKM direction, Mehrotra predictor-corrector).
//!
//! The margin problem is cast in the dual standard form
//! `max b^T x s.t. C - sum_l x_l A_l = S ⪰ 0` with `x = (y, t)`. Two kinds
//! of auxiliary 1x1 blocks keep it bounded: a cap `t <= 1` and a box
//! `|y_l| <= R` on the normalized variables. The primal iterate `X` restricted
//! to the original blocks is the Farkas ray candidate when the optimal margin
//! is negative.

use log::debug;

use super::problem::LmiProblem;
use super::verify::{verify_point, verify_ray};
use crate::symcore::{lstsq, min_eig, project_psd, DenseMatrix, SymMatrix, RANK_TOL};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Feasibility tolerance on eigenvalues (and ray conditions).
    pub tol: f64,
    pub max_iters: usize,
    /// Box radius on the normalized variables.
    pub box_radius: f64,
    /// Stop as soon as a point with at least this margin is found.
    pub target_margin: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iters: 120,
            box_radius: 1e4,
            target_margin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasStatus {
    Feasible(Vec<f64>),
    /// Per-block psd duals certifying infeasibility.
    Infeasible(Vec<SymMatrix>),
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct FeasResult {
    pub status: FeasStatus,
    /// Minimum eigenvalue at the returned (or best) point; for infeasible
    /// problems, the certified dual bound `<F_0, Z>` with `sum tr Z = 1`.
    pub margin: f64,
    pub iterations: usize,
}

impl FeasResult {
    pub fn point(&self) -> Option<&[f64]> {
        match &self.status {
            FeasStatus::Feasible(y) => Some(y),
            _ => None,
        }
    }
}

struct Block {
    n: usize,
    c: DenseMatrix,
    terms: Vec<(usize, DenseMatrix)>,
}

struct Standard {
    blocks: Vec<Block>,
    /// Number of original blocks (they come first).
    n_orig: usize,
    nvars: usize,
    /// `y_l = x_l * yscale[l]`
    yscale: Vec<f64>,
}

fn sym_to_dense(s: &SymMatrix) -> DenseMatrix {
    s.to_dense()
}

fn build_standard(p: &LmiProblem, box_radius: f64) -> Standard {
    let m = p.num_vars();
    let sigma = p
        .blocks()
        .iter()
        .map(|b| b.constant().frobenius())
        .fold(1.0f64, f64::max);
    let col_norm: Vec<f64> = (0..m)
        .map(|l| {
            let v = p
                .blocks()
                .iter()
                .map(|b| b.coeff(l).frobenius())
                .fold(0.0f64, f64::max);
            if v > 0.0 {
                v
            } else {
                1.0
            }
        })
        .collect();
    let t_idx = m;
    let mut blocks = Vec::new();
    for b in p.blocks() {
        let n = b.size();
        let c = sym_to_dense(b.constant()).scaled(1.0 / sigma);
        let mut terms: Vec<(usize, DenseMatrix)> = b
            .active_vars()
            .map(|l| (l, sym_to_dense(b.coeff(l)).scaled(-1.0 / col_norm[l])))
            .collect();
        terms.push((t_idx, DenseMatrix::identity(n)));
        blocks.push(Block { n, c, terms });
    }
    let n_orig = blocks.len();
    let scalar = |v: f64| DenseMatrix::from_fn(1, 1, |_, _| v);
    // t <= 1
    blocks.push(Block {
        n: 1,
        c: scalar(1.0),
        terms: vec![(t_idx, scalar(1.0))],
    });
    for l in 0..m {
        blocks.push(Block {
            n: 1,
            c: scalar(box_radius),
            terms: vec![(l, scalar(1.0))],
        });
        blocks.push(Block {
            n: 1,
            c: scalar(box_radius),
            terms: vec![(l, scalar(-1.0))],
        });
    }
    let yscale = col_norm.iter().map(|c| sigma / c).collect();
    Standard {
        blocks,
        n_orig,
        nvars: m + 1,
        yscale,
    }
}

/// `sum_ij A_ij W_ij`, which is `Trace(A W)` for symmetric `A`.
fn inner(a: &DenseMatrix, w: &DenseMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(w.as_slice())
        .map(|(x, y)| x * y)
        .sum()
}

fn sym(w: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(w.rows(), w.cols(), |i, j| 0.5 * (w.get(i, j) + w.get(j, i)))
}

fn add_scaled(a: &DenseMatrix, s: f64, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + s * b.get(i, j))
}

/// Largest step `alpha` keeping `X + alpha dX` positive semidefinite.
fn max_step(x: &DenseMatrix, dx: &DenseMatrix) -> f64 {
    if x.rows() == 1 {
        let (v, d) = (x.get(0, 0), dx.get(0, 0));
        return if d < 0.0 { -v / d } else { f64::INFINITY };
    }
    let Some(l) = x.cholesky() else {
        return 0.0;
    };
    let Some(linv) = l.inverse() else {
        return 0.0;
    };
    let w = linv.matmul(dx).matmul(&linv.transpose());
    let w = SymMatrix::symmetrize(&w);
    match min_eig(&w) {
        Ok(lmin) if lmin < 0.0 => -1.0 / lmin,
        Ok(_) => f64::INFINITY,
        Err(_) => 0.0,
    }
}

struct Iterate {
    x: Vec<DenseMatrix>,
    s: Vec<DenseMatrix>,
    y: Vec<f64>,
}

struct Direction {
    dx: Vec<DenseMatrix>,
    ds: Vec<DenseMatrix>,
    dy: Vec<f64>,
}

pub fn solve(problem: &LmiProblem, opts: &SolveOptions) -> FeasResult {
    let m = problem.num_vars();
    if problem.blocks().is_empty() {
        return FeasResult {
            status: FeasStatus::Feasible(vec![0.0; m]),
            margin: f64::INFINITY,
            iterations: 0,
        };
    }
    let st = build_standard(problem, opts.box_radius);
    let nv = st.nvars;
    let t_idx = nv - 1;
    let mut b = vec![0.0; nv];
    b[t_idx] = 1.0;
    let total_dim: usize = st.blocks.iter().map(|bl| bl.n).sum();

    let mut it = Iterate {
        x: st
            .blocks
            .iter()
            .map(|bl| DenseMatrix::identity(bl.n))
            .collect(),
        s: st
            .blocks
            .iter()
            .map(|bl| DenseMatrix::identity(bl.n).scaled(1.0 + bl.c.max_abs()))
            .collect(),
        y: vec![0.0; nv],
    };

    let to_user = |x: &[f64]| -> Vec<f64> { (0..m).map(|l| x[l] * st.yscale[l]).collect() };

    let mut best_y = vec![0.0; m];
    let mut best_margin = problem.margin_at(&best_y).unwrap_or(f64::NEG_INFINITY);
    let mut iterations = 0;
    let mut tried_ray_at = f64::INFINITY;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        // residuals
        let rp: Vec<f64> = (0..nv)
            .map(|l| {
                let mut acc = b[l];
                for (bl, xb) in st.blocks.iter().zip(&it.x) {
                    for (k, a) in &bl.terms {
                        if *k == l {
                            acc -= inner(a, xb);
                        }
                    }
                }
                acc
            })
            .collect();
        let rd: Vec<DenseMatrix> = st
            .blocks
            .iter()
            .zip(&it.s)
            .map(|(bl, sb)| {
                let mut r = bl.c.sub(sb);
                for (k, a) in &bl.terms {
                    r = add_scaled(&r, -it.y[*k], a);
                }
                r
            })
            .collect();
        let mu: f64 =
            it.x.iter()
                .zip(&it.s)
                .map(|(x, s)| inner(x, s))
                .sum::<f64>()
                / total_dim as f64;
        let pobj: f64 = st
            .blocks
            .iter()
            .zip(&it.x)
            .map(|(bl, x)| inner(&bl.c, x))
            .sum();
        let dobj = it.y[t_idx];
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dinf = rd.iter().map(|r| r.frobenius()).fold(0.0, f64::max);

        // current point in user coordinates
        let y_user = to_user(&it.y);
        if let Ok(mg) = problem.margin_at(&y_user) {
            if mg > best_margin {
                best_margin = mg;
                best_y = y_user.clone();
            }
        }
        if let Some(target) = opts.target_margin {
            if best_margin >= target {
                break;
            }
        }

        // Infeasibility: the primal objective bounds the optimal margin.
        if pinf < 1e-7 && pobj < -1e-7 && pobj < 0.5 * tried_ray_at {
            tried_ray_at = pobj;
            if let Some((z, val)) = extract_ray(problem, &st, &it.x, opts.tol) {
                debug!("lmifeas: infeasible after {iterations} iterations (bound {val:e})");
                return FeasResult {
                    status: FeasStatus::Infeasible(z),
                    margin: val,
                    iterations,
                };
            }
        }

        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if pinf < 1e-10 && dinf < 1e-10 && gap < 1e-10 {
            break;
        }

        // Schur complement and inverses
        let sinv: Vec<DenseMatrix> =
            match it.s.iter().map(|s| s.inverse()).collect::<Option<Vec<_>>>() {
                Some(v) => v,
                None => break,
            };
        let mut schur = DenseMatrix::zeros(nv, nv);
        for ((bl, xb), si) in st.blocks.iter().zip(&it.x).zip(&sinv) {
            for (k, ak) in &bl.terms {
                let pk = xb.matmul(ak).matmul(si);
                for (l, al) in &bl.terms {
                    let v = inner(al, &pk);
                    schur.set(*l, *k, schur.get(*l, *k) + v);
                }
            }
        }
        // symmetrize and regularize lightly
        let diag_max = (0..nv)
            .map(|i| schur.get(i, i).abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let schur = DenseMatrix::from_fn(nv, nv, |i, j| {
            0.5 * (schur.get(i, j) + schur.get(j, i)) + if i == j { 1e-14 * diag_max } else { 0.0 }
        });
        let schur_inv = match schur
            .cholesky()
            .and_then(|_| schur.inverse())
            .or_else(|| schur.inverse())
        {
            Some(v) => v,
            None => break,
        };

        let direction = |rc: &[DenseMatrix]| -> Direction {
            // rhs_l = rp_l - <A_l, Rc - X Rd S^-1>
            let mut rhs = rp.clone();
            let mut w = Vec::with_capacity(st.blocks.len());
            for (bi, bl) in st.blocks.iter().enumerate() {
                let wb = rc[bi].sub(&it.x[bi].matmul(&rd[bi]).matmul(&sinv[bi]));
                for (l, al) in &bl.terms {
                    rhs[*l] -= inner(al, &wb);
                }
                w.push(wb);
            }
            let dy = schur_inv.mul_vec(&rhs);
            let mut dx = Vec::with_capacity(st.blocks.len());
            let mut ds = Vec::with_capacity(st.blocks.len());
            for (bi, bl) in st.blocks.iter().enumerate() {
                let mut dsb = rd[bi].clone();
                for (k, ak) in &bl.terms {
                    dsb = add_scaled(&dsb, -dy[*k], ak);
                }
                let dxb = sym(&rc[bi].sub(&it.x[bi].matmul(&dsb).matmul(&sinv[bi])));
                dx.push(dxb);
                ds.push(dsb);
            }
            Direction { dx, ds, dy }
        };
        let step_lengths = |d: &Direction| -> (f64, f64) {
            let ap =
                it.x.iter()
                    .zip(&d.dx)
                    .map(|(x, dx)| max_step(x, dx))
                    .fold(f64::INFINITY, f64::min);
            let ad =
                it.s.iter()
                    .zip(&d.ds)
                    .map(|(s, ds)| max_step(s, ds))
                    .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // predictor
        let rc_aff: Vec<DenseMatrix> = it.x.iter().map(|x| x.scaled(-1.0)).collect();
        let aff = direction(&rc_aff);
        let (ap, ad) = step_lengths(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 =
            it.x.iter()
                .zip(&aff.dx)
                .zip(it.s.iter().zip(&aff.ds))
                .map(|((x, dx), (s, ds))| inner(&add_scaled(x, ap, dx), &add_scaled(s, ad, ds)))
                .sum::<f64>()
                / total_dim as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<DenseMatrix> = (0..st.blocks.len())
            .map(|bi| {
                let base = sinv[bi].scaled(sigma * mu).sub(&it.x[bi]);
                base.sub(&aff.dx[bi].matmul(&aff.ds[bi]).matmul(&sinv[bi]))
            })
            .collect();
        let dir = direction(&rc);
        let (ap, ad) = step_lengths(&dir);
        let ap = (0.95 * ap).min(1.0);
        let ad = (0.95 * ad).min(1.0);
        if !(ap > 1e-12 && ad > 1e-12) {
            debug!("lmifeas: step collapsed at iteration {iterations}");
            break;
        }
        for bi in 0..st.blocks.len() {
            it.x[bi] = sym(&add_scaled(&it.x[bi], ap, &dir.dx[bi]));
            it.s[bi] = sym(&add_scaled(&it.s[bi], ad, &dir.ds[bi]));
        }
        for l in 0..nv {
            it.y[l] += ad * dir.dy[l];
        }
        if !it.y.iter().all(|v| v.is_finite()) {
            break;
        }
    }

    // final evaluation on the original problem
    let y_user = to_user(&it.y);
    if let Ok(mg) = problem.margin_at(&y_user) {
        if mg > best_margin {
            best_margin = mg;
            best_y = y_user;
        }
    }
    if best_margin >= -opts.tol && verify_point(problem, &best_y, opts.tol).unwrap_or(false) {
        return FeasResult {
            status: FeasStatus::Feasible(best_y),
            margin: best_margin,
            iterations,
        };
    }
    if let Some((z, val)) = extract_ray(problem, &st, &it.x, opts.tol) {
        return FeasResult {
            status: FeasStatus::Infeasible(z),
            margin: val,
            iterations,
        };
    }
    FeasResult {
        status: FeasStatus::Undetermined,
        margin: best_margin,
        iterations,
    }
}

/// Turns the primal iterate on the original blocks into a verified Farkas
/// ray: normalize, project onto `sum_b <F_l^b, Z_b> = 0`, clip to psd, and
/// re-verify.
fn extract_ray(
    problem: &LmiProblem,
    st: &Standard,
    x: &[DenseMatrix],
    tol: f64,
) -> Option<(Vec<SymMatrix>, f64)> {
    let m = problem.num_vars();
    let mut z: Vec<SymMatrix> = x[..st.n_orig].iter().map(SymMatrix::symmetrize).collect();
    let blocks = problem.blocks();
    let active: Vec<usize> = (0..m)
        .filter(|&l| blocks.iter().any(|b| b.coeff(l).max_abs() > 0.0))
        .collect();
    let gram = DenseMatrix::from_fn(active.len(), active.len(), |i, j| {
        blocks
            .iter()
            .map(|b| b.coeff(active[i]).inner(b.coeff(active[j])))
            .sum()
    });
    for _round in 0..4 {
        let tr: f64 = z.iter().map(|zb| zb.trace()).sum();
        if !(tr > 0.0) {
            return None;
        }
        for zb in z.iter_mut() {
            *zb = zb.scaled(1.0 / tr);
        }
        if !active.is_empty() {
            let a: Vec<f64> = active
                .iter()
                .map(|&l| {
                    blocks
                        .iter()
                        .zip(&z)
                        .map(|(b, zb)| b.coeff(l).inner(zb))
                        .sum()
                })
                .collect();
            let (alpha, _) = lstsq(&gram, &a, RANK_TOL).ok()?;
            for (bi, b) in blocks.iter().enumerate() {
                for (t, &l) in active.iter().enumerate() {
                    z[bi].axpy(-alpha[t], b.coeff(l));
                }
            }
        }
        for zb in z.iter_mut() {
            *zb = project_psd(zb).ok()?;
        }
        if verify_ray(problem, &z, tol).unwrap_or(false) {
            let tr: f64 = z.iter().map(|zb| zb.trace()).sum();
            let val: f64 = blocks
                .iter()
                .zip(&z)
                .map(|(b, zb)| b.constant().inner(zb))
                .sum::<f64>()
                / tr;
            return Some((z, val));
        }
    }
    None
}
