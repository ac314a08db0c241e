//! Spectrahedral lifts `{proj x : g(x) ⪰ 0}` of polytopes, their calculus,
//! and psd factorizations read off from a lift.

mod hexagon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmifeas::{self, FeasStatus, LmiProblem, SolveOptions};
use crate::polyform::{slack_matrix, HPolyhedron, VPolytope};
use crate::psdfact::{verify_factorization, PsdFactorization};
use crate::symcore::{
    lstsq, min_eig, null_space, smat, svec, svec_len, DenseMatrix, SymMatrix, RANK_TOL,
};

pub use hexagon::{
    hex_octahedron_lift, is_biplanar, normalize_hexagon, AffineMap2, HexagonCanonical, Octahedron,
};

/// Residual bound for factorizations assembled from a lift.
pub const LIFT_VERIFY_TOL: f64 = 1e-8;

/// Pencil `g(x) = x_1 G_1 + ... + x_{d-1} G_{d-1} + G_d` of `k x k` matrices
/// and a projection `proj` (`n x (d-1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LiftRepr", into = "LiftRepr")]
pub struct SpectraLift {
    k: usize,
    n: usize,
    g: Vec<SymMatrix>,
    proj: DenseMatrix,
    /// Set when the represented set is known to be a bounded polytope.
    pub polytopal: bool,
}

#[derive(Serialize, Deserialize)]
struct LiftRepr {
    k: usize,
    n: usize,
    #[serde(rename = "G")]
    g: Vec<SymMatrix>,
    proj: Vec<Vec<f64>>,
    #[serde(default)]
    polytopal: bool,
}

impl TryFrom<LiftRepr> for SpectraLift {
    type Error = Error;
    fn try_from(r: LiftRepr) -> Result<Self> {
        let nvars = r.g.len().saturating_sub(1);
        let proj = if r.proj.is_empty() {
            DenseMatrix::zeros(0, nvars)
        } else {
            DenseMatrix::from_rows(&r.proj)?
        };
        let lift = SpectraLift::new(r.g, proj)?.with_polytopal(r.polytopal);
        if lift.k != r.k || lift.n != r.n {
            return Err(Error::DimensionMismatch(format!(
                "declared k={}, n={} but pencil gives k={}, n={}",
                r.k, r.n, lift.k, lift.n
            )));
        }
        Ok(lift)
    }
}

impl From<SpectraLift> for LiftRepr {
    fn from(l: SpectraLift) -> Self {
        LiftRepr {
            k: l.k,
            n: l.n,
            proj: l.proj.to_rows(),
            g: l.g,
            polytopal: l.polytopal,
        }
    }
}

impl SpectraLift {
    /// `g` holds `G_1..G_{d-1}` followed by the constant term `G_d`.
    pub fn new(g: Vec<SymMatrix>, proj: DenseMatrix) -> Result<Self> {
        let Some(last) = g.last() else {
            return Err(Error::InvalidInput(
                "pencil needs at least the constant term".into(),
            ));
        };
        let k = last.dim();
        if k == 0 || g.iter().any(|m| m.dim() != k) {
            return Err(Error::DimensionMismatch(
                "pencil matrices differ in size".into(),
            ));
        }
        if g.iter().any(|m| !m.is_finite()) || !proj.is_finite() {
            return Err(Error::InvalidInput("non-finite lift entry".into()));
        }
        if proj.cols() != g.len() - 1 {
            return Err(Error::DimensionMismatch(format!(
                "projection has {} columns for {} pencil variables",
                proj.cols(),
                g.len() - 1
            )));
        }
        Ok(SpectraLift {
            k,
            n: proj.rows(),
            g,
            proj,
            polytopal: false,
        })
    }

    pub fn with_polytopal(mut self, flag: bool) -> Self {
        self.polytopal = flag;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pencil variables `d - 1`.
    pub fn num_vars(&self) -> usize {
        self.g.len() - 1
    }

    pub fn pencil(&self) -> &[SymMatrix] {
        &self.g
    }

    pub fn proj(&self) -> &DenseMatrix {
        &self.proj
    }

    pub fn eval(&self, x: &[f64]) -> Result<SymMatrix> {
        if x.len() != self.num_vars() {
            return Err(Error::DimensionMismatch(format!(
                "lift point has {} coordinates, pencil has {} variables",
                x.len(),
                self.num_vars()
            )));
        }
        let mut out = self.g[self.num_vars()].clone();
        for (xi, gi) in x.iter().zip(&self.g) {
            out.axpy(*xi, gi);
        }
        Ok(out)
    }

    /// `g(x) ⪰ -tol I`.
    pub fn contains_lifted(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(min_eig(&self.eval(x)?)? >= -tol)
    }

    /// Diagonal lift `diag(d_j - c_j^T x)` of an inequality description.
    pub fn from_hpolyhedron(q: &HPolyhedron) -> Result<Self> {
        let n = q.dim();
        let ineqs = q.inequalities();
        let mut g: Vec<SymMatrix> = (0..n)
            .map(|l| SymMatrix::from_diag(&ineqs.iter().map(|ie| -ie.c[l]).collect::<Vec<_>>()))
            .collect();
        g.push(SymMatrix::from_diag(
            &ineqs.iter().map(|ie| ie.d).collect::<Vec<_>>(),
        ));
        let bounded = crate::polyform::is_bounded(q).unwrap_or(false);
        Ok(SpectraLift::new(g, DenseMatrix::identity(n))?.with_polytopal(bounded))
    }

    /// Diagonal lift of a full-dimensional polytope via its facets.
    pub fn from_vpolytope(p: &VPolytope) -> Result<Self> {
        Ok(Self::from_hpolyhedron(&p.facets()?)?.with_polytopal(true))
    }

    /// The unit disk `[[1 + x, y], [y, 1 - x]] ⪰ 0`.
    pub fn disk() -> Self {
        let g = vec![
            SymMatrix::from_diag(&[1.0, -1.0]),
            SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).expect("static"),
            SymMatrix::identity(2),
        ];
        SpectraLift::new(g, DenseMatrix::identity(2)).expect("static lift")
    }

    /// A lift point `x` with `proj x = point` and `g(x) ⪰ 0`, chosen as
    /// deep inside the fiber as the solver gets.
    pub fn preimage(&self, point: &[f64], opts: &SolveOptions) -> Result<Option<Vec<f64>>> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, lift targets dimension {}",
                point.len(),
                self.n
            )));
        }
        let nv = self.num_vars();
        let (x0, basis) = if self.n == 0 {
            (vec![0.0; nv], DenseMatrix::identity(nv))
        } else {
            let (x0, res) = lstsq(&self.proj, point, RANK_TOL)?;
            let scale = 1.0 + point.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if res > 1e-9 * scale {
                return Ok(None);
            }
            (x0, null_space(&self.proj, RANK_TOL)?)
        };
        let g0 = self.eval(&x0)?;
        let free = basis.cols();
        if free == 0 {
            return Ok((min_eig(&g0)? >= -opts.tol).then_some(x0));
        }
        let mut prob = LmiProblem::new(free);
        let mut mats = vec![g0];
        for t in 0..free {
            let dir = basis.col(t);
            let mut m = SymMatrix::zeros(self.k);
            for (l, dl) in dir.iter().enumerate() {
                m.axpy(*dl, &self.g[l]);
            }
            mats.push(m);
        }
        prob.add_block(mats)?;
        let res = lmifeas::solve(&prob, opts);
        Ok(match res.status {
            FeasStatus::Feasible(z) => {
                let x = (0..nv)
                    .map(|l| x0[l] + (0..free).map(|t| basis.get(l, t) * z[t]).sum::<f64>())
                    .collect();
                Some(x)
            }
            _ => None,
        })
    }
}

/// Adds `a_0 + a^T y >= 0` (over the target variables `y = proj x`) as a new
/// diagonal entry of the pencil.
pub fn augment_facet(lift: &SpectraLift, a0: f64, a: &[f64]) -> Result<SpectraLift> {
    if a.len() != lift.n {
        return Err(Error::DimensionMismatch(format!(
            "inequality has {} coefficients, lift targets dimension {}",
            a.len(),
            lift.n
        )));
    }
    let tilde = lift.proj.vec_mul(a);
    let nv = lift.num_vars();
    let g = lift
        .g
        .iter()
        .enumerate()
        .map(|(i, gi)| {
            let corner = if i < nv { tilde[i] } else { a0 };
            gi.block_diag(&SymMatrix::from_diag(&[corner]))
        })
        .collect();
    Ok(SpectraLift::new(g, lift.proj.clone())?.with_polytopal(lift.polytopal))
}

/// Lift of `A(C)`: the pencil is kept and the projection becomes `A proj`.
pub fn project_lift(lift: &SpectraLift, a: &DenseMatrix) -> Result<SpectraLift> {
    if a.cols() != lift.n {
        return Err(Error::DimensionMismatch(format!(
            "map has {} columns, lift targets dimension {}",
            a.cols(),
            lift.n
        )));
    }
    let proj = if lift.n == 0 {
        DenseMatrix::zeros(a.rows(), lift.num_vars())
    } else {
        a.matmul(&lift.proj)
    };
    Ok(SpectraLift::new(lift.g.clone(), proj)?.with_polytopal(lift.polytopal))
}

/// Size-`k` factorization of `S_{P,Q}` from a lift of a set `C` with
/// `P ⊆ C ⊆ Q`: `A_i = g(x_i)` for a preimage `x_i` of each vertex, and
/// `B_j ⪰ 0` with `<g(x), B_j> = d_j - c_j^T proj x` identically in `x`.
pub fn factorization_from_lift(
    lift: &SpectraLift,
    p: &VPolytope,
    q: &HPolyhedron,
) -> Result<PsdFactorization> {
    if p.dim() != lift.n || q.dim() != lift.n {
        return Err(Error::DimensionMismatch(format!(
            "lift targets dimension {}, P has {}, Q has {}",
            lift.n,
            p.dim(),
            q.dim()
        )));
    }
    let opts = SolveOptions::default();
    let mut a = Vec::with_capacity(p.len());
    for (i, v) in p.vertices().iter().enumerate() {
        let x = lift.preimage(v, &opts)?.ok_or(Error::VertexNotInLift(i))?;
        a.push(lift.eval(&x)?);
    }
    let b = q
        .inequalities()
        .iter()
        .enumerate()
        .map(|(j, ie)| {
            let rhs: Vec<f64> = lift.proj.vec_mul(&ie.c).iter().map(|v| -v).collect();
            dual_factor(lift, &rhs, ie.d, &opts)?.ok_or(Error::NoDualWitness(j))
        })
        .collect::<Result<Vec<_>>>()?;
    let f = PsdFactorization::new(lift.k, a, b)?;
    let s = slack_matrix(p, q)?;
    let report = verify_factorization(&s, &f, LIFT_VERIFY_TOL * s.max_entry().max(1.0))?;
    if !report.pass {
        return Err(Error::VerificationFailed(report.max_residual));
    }
    let mut f = f;
    f.residual = report.max_residual;
    Ok(f)
}

/// `B ⪰ 0` with `<G_l, B> = lin[l]` for the pencil variables and
/// `<G_d, B> = constant`.
fn dual_factor(
    lift: &SpectraLift,
    lin: &[f64],
    constant: f64,
    opts: &SolveOptions,
) -> Result<Option<SymMatrix>> {
    let k = lift.k;
    let dim = svec_len(k);
    let rows: Vec<Vec<f64>> = lift.g.iter().map(svec).collect();
    let e = DenseMatrix::from_rows(&rows)?;
    let mut rhs = lin.to_vec();
    rhs.push(constant);
    let (b0, res) = lstsq(&e, &rhs, RANK_TOL)?;
    let scale = 1.0 + rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res > 1e-9 * scale {
        return Ok(None);
    }
    let basis = null_space(&e, RANK_TOL)?;
    let base = smat(&b0)?;
    if basis.cols() == 0 {
        return Ok((min_eig(&base)? >= -opts.tol).then_some(base));
    }
    let mut prob = LmiProblem::new(basis.cols());
    let mut mats = vec![base];
    for t in 0..basis.cols() {
        mats.push(smat(&basis.col(t))?);
    }
    prob.add_block(mats)?;
    let res = lmifeas::solve(&prob, opts);
    Ok(match res.status {
        FeasStatus::Feasible(z) => {
            let v: Vec<f64> = (0..dim)
                .map(|r| {
                    b0[r]
                        + (0..basis.cols())
                            .map(|t| basis.get(r, t) * z[t])
                            .sum::<f64>()
                })
                .collect();
            Some(smat(&v)?)
        }
        _ => None,
    })
}
