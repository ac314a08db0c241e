//! Polytopes, polyhedra, slack matrices and nested pairs.
//!
//! A [`VPolytope`] is a vertex list, an [`HPolyhedron`] an inequality list
//! `c_j^T x <= d_j`. The generalized slack matrix of `P ⊆ Q` has entries
//! `d_j - c_j^T p_i`; [`pair_from_matrix`] goes the other way, turning a
//! nonnegative rank-3 matrix into a nested pair of polygons whose slack
//! matrix it is.

mod hull;
mod pair;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmifeas::{self, FeasStatus, LmiProblem, SolveOptions};
use crate::symcore::{dot, lstsq, matrix_rank, norm2, null_space, DenseMatrix, RANK_TOL};

pub use hull::{convex_hull_2d, cross, facets_bruteforce, vertices_bruteforce};
pub use pair::{pair_from_matrix, pair_from_matrix_rank, NestedPair};

/// Absolute slack tolerance, applied after scaling to unit size.
pub const SLACK_TOL: f64 = 1e-10;

/// Vertex description `conv(p_1, ..., p_v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VPolytopeRepr", into = "VPolytopeRepr")]
pub struct VPolytope {
    n: usize,
    vertices: Vec<Vec<f64>>,
    /// Set once non-extreme points have been removed.
    verified: bool,
}

#[derive(Serialize, Deserialize)]
struct VPolytopeRepr {
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<VPolytopeRepr> for VPolytope {
    type Error = Error;
    fn try_from(r: VPolytopeRepr) -> Result<Self> {
        VPolytope::new(r.vertices)
    }
}

impl From<VPolytope> for VPolytopeRepr {
    fn from(p: VPolytope) -> Self {
        VPolytopeRepr {
            vertices: p.vertices,
        }
    }
}

impl VPolytope {
    /// Point list with at least one point, equal dimensions, finite and
    /// pairwise distinct entries.
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self::from_points(vertices)?;
        for i in 0..p.vertices.len() {
            for j in i + 1..p.vertices.len() {
                if p.vertices[i] == p.vertices[j] {
                    return Err(Error::InvalidInput(format!(
                        "vertices {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(p)
    }

    /// Like [`VPolytope::new`] but tolerates repeated points (nested pairs
    /// built from matrices with repeated rows).
    pub fn from_points(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::InvalidInput("polytope needs at least one vertex".into()))?;
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("vertex dimensions differ".into()));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite vertex coordinate".into()));
        }
        Ok(VPolytope {
            n,
            vertices,
            verified: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    pub fn translated(&self, t: &[f64]) -> Self {
        VPolytope {
            n: self.n,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().zip(t).map(|(a, b)| a + b).collect())
                .collect(),
            verified: self.verified,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        VPolytope {
            n: self.n,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|a| a * s).collect())
                .collect(),
            verified: self.verified,
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for v in &self.vertices {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi;
            }
        }
        let k = self.vertices.len() as f64;
        c.iter_mut().for_each(|x| *x /= k);
        c
    }

    /// Removes non-extreme points. Planar polytopes come back in
    /// counterclockwise order.
    pub fn reduced(&self) -> Result<Self> {
        let vertices = match self.n {
            2 => {
                let eps = 1e-12 * hull::point_scale(&self.vertices).powi(2);
                convex_hull_2d(&self.vertices, eps)
                    .into_iter()
                    .map(|i| self.vertices[i].clone())
                    .collect()
            }
            _ => {
                let h = self.facets()?;
                let eps = 1e-9 * hull::point_scale(&self.vertices);
                // A point is extreme iff it is tight on at least n affinely
                // independent facets.
                self.vertices
                    .iter()
                    .filter(|v| {
                        let tight: Vec<Vec<f64>> = h
                            .inequalities
                            .iter()
                            .filter(|ie| (ie.d - dot(&ie.c, v)).abs() <= eps)
                            .map(|ie| ie.c.clone())
                            .collect();
                        !tight.is_empty()
                            && matrix_rank(&DenseMatrix::from_rows(&tight).unwrap(), 1e-9)
                                .map(|r| r == self.n)
                                .unwrap_or(false)
                    })
                    .cloned()
                    .collect()
            }
        };
        Ok(VPolytope {
            n: self.n,
            vertices,
            verified: true,
        })
    }

    /// Facet description of a full-dimensional polytope of dimension at
    /// most 3, outer normals normalized to unit length. For polygons the
    /// facets come in counterclockwise order, facet `j` being the edge from
    /// hull vertex `j` to hull vertex `j+1`.
    pub fn facets(&self) -> Result<HPolyhedron> {
        let scale = hull::point_scale(&self.vertices);
        let ineqs = match self.n {
            1 => {
                let lo = self
                    .vertices
                    .iter()
                    .map(|v| v[0])
                    .fold(f64::INFINITY, f64::min);
                let hi = self
                    .vertices
                    .iter()
                    .map(|v| v[0])
                    .fold(f64::NEG_INFINITY, f64::max);
                if hi - lo <= 1e-12 * scale {
                    return Err(Error::InvalidInput(
                        "polytope is not full-dimensional".into(),
                    ));
                }
                vec![(vec![1.0], hi), (vec![-1.0], -lo)]
            }
            2 => {
                let h = convex_hull_2d(&self.vertices, 1e-12 * scale * scale);
                if h.len() < 3 {
                    return Err(Error::InvalidInput(
                        "polygon is not full-dimensional".into(),
                    ));
                }
                (0..h.len())
                    .map(|t| {
                        let a = &self.vertices[h[t]];
                        let b = &self.vertices[h[(t + 1) % h.len()]];
                        let c = vec![b[1] - a[1], a[0] - b[0]];
                        let nc = norm2(&c);
                        let c: Vec<f64> = c.iter().map(|x| x / nc).collect();
                        let d = dot(&c, a);
                        (c, d)
                    })
                    .collect()
            }
            3 => {
                let f = facets_bruteforce(&self.vertices, 1e-9 * scale);
                if f.len() < 4 {
                    return Err(Error::InvalidInput(
                        "polytope is not full-dimensional".into(),
                    ));
                }
                f
            }
            n => {
                return Err(Error::DomainError(format!(
                    "facet enumeration is limited to dimension <= 3 (got {n})"
                )))
            }
        };
        HPolyhedron::new(
            self.n,
            ineqs
                .into_iter()
                .map(|(c, d)| Inequality { c, d })
                .collect(),
        )
    }
}

/// One inequality `c^T x <= d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub c: Vec<f64>,
    pub d: f64,
}

/// Inequality description `{x : c_j^T x <= d_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HPolyhedronRepr", into = "HPolyhedronRepr")]
pub struct HPolyhedron {
    n: usize,
    pub(crate) inequalities: Vec<Inequality>,
}

#[derive(Serialize, Deserialize)]
struct HPolyhedronRepr {
    inequalities: Vec<Inequality>,
}

impl TryFrom<HPolyhedronRepr> for HPolyhedron {
    type Error = Error;
    fn try_from(r: HPolyhedronRepr) -> Result<Self> {
        let n = r.inequalities.first().map(|ie| ie.c.len()).ok_or_else(|| {
            Error::InvalidInput("polyhedron needs at least one inequality".into())
        })?;
        HPolyhedron::new(n, r.inequalities)
    }
}

impl From<HPolyhedron> for HPolyhedronRepr {
    fn from(h: HPolyhedron) -> Self {
        HPolyhedronRepr {
            inequalities: h.inequalities,
        }
    }
}

impl HPolyhedron {
    pub fn new(n: usize, inequalities: Vec<Inequality>) -> Result<Self> {
        for (j, ie) in inequalities.iter().enumerate() {
            if ie.c.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "inequality {j} has {} coefficients, expected {n}",
                    ie.c.len()
                )));
            }
            if !ie.d.is_finite() || ie.c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("inequality {j} is not finite")));
            }
            if ie.c.iter().all(|&x| x == 0.0) && ie.d < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "inequality {j} reads 0 <= {} and is infeasible",
                    ie.d
                )));
            }
        }
        Ok(HPolyhedron { n, inequalities })
    }

    pub fn from_pairs(n: usize, pairs: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        Self::new(
            n,
            pairs
                .into_iter()
                .map(|(c, d)| Inequality { c, d })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inequalities(&self) -> &[Inequality] {
        &self.inequalities
    }

    pub fn len(&self) -> usize {
        self.inequalities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inequalities.is_empty()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.inequalities
            .iter()
            .all(|ie| dot(&ie.c, x) <= ie.d + tol)
    }

    /// Same set in coordinates `x' = x - t`.
    pub fn translated(&self, t: &[f64]) -> Self {
        HPolyhedron {
            n: self.n,
            inequalities: self
                .inequalities
                .iter()
                .map(|ie| Inequality {
                    c: ie.c.clone(),
                    d: ie.d - dot(&ie.c, t),
                })
                .collect(),
        }
    }

    /// Vertices of a bounded polyhedron of dimension at most 3.
    pub fn vertices(&self) -> Result<VPolytope> {
        if self.n > 3 {
            return Err(Error::DomainError(format!(
                "vertex enumeration is limited to dimension <= 3 (got {})",
                self.n
            )));
        }
        let pairs: Vec<(Vec<f64>, f64)> = self
            .inequalities
            .iter()
            .map(|ie| {
                let s = norm2(&ie.c).max(f64::MIN_POSITIVE);
                (ie.c.iter().map(|x| x / s).collect(), ie.d / s)
            })
            .collect();
        let scale = pairs.iter().fold(1.0f64, |m, (_, d)| m.max(d.abs()));
        let v = vertices_bruteforce(&pairs, self.n, 1e-9 * scale);
        VPolytope::new(v)
    }
}

/// Entrywise nonnegative dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NonnegRepr", into = "NonnegRepr")]
pub struct NonnegMatrix(DenseMatrix);

#[derive(Serialize, Deserialize)]
struct NonnegRepr {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<NonnegRepr> for NonnegMatrix {
    type Error = Error;
    fn try_from(r: NonnegRepr) -> Result<Self> {
        NonnegMatrix::from_rows(&r.rows)
    }
}

impl From<NonnegMatrix> for NonnegRepr {
    fn from(m: NonnegMatrix) -> Self {
        NonnegRepr {
            rows: m.0.to_rows(),
        }
    }
}

impl NonnegMatrix {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        if let Some(v) = m.as_slice().iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidInput(format!("negative entry {v}")));
        }
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        Ok(NonnegMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?)
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn max_entry(&self) -> f64 {
        self.0.max_abs()
    }

    pub fn transpose(&self) -> Self {
        NonnegMatrix(self.0.transpose())
    }

    pub fn rank(&self, rel_tol: f64) -> Result<usize> {
        matrix_rank(&self.0, rel_tol)
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        NonnegMatrix(self.0.select_cols(idx))
    }
}

/// Generalized slack matrix `S_{P,Q}` with entries `d_j - c_j^T p_i`.
/// Slacks down to `-SLACK_TOL` (relative to the pair's scale) are clipped to
/// zero; anything more negative means `P` is not inside `Q`.
pub fn slack_matrix(p: &VPolytope, q: &HPolyhedron) -> Result<NonnegMatrix> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "inner body has dimension {}, outer {}",
            p.dim(),
            q.dim()
        )));
    }
    if q.is_empty() {
        return Err(Error::InvalidInput(
            "outer polyhedron has no inequalities".into(),
        ));
    }
    let radius = p.vertices().iter().fold(0.0f64, |m, v| m.max(norm2(v)));
    let mut m = DenseMatrix::zeros(p.len(), q.len());
    for (i, v) in p.vertices().iter().enumerate() {
        for (j, ie) in q.inequalities().iter().enumerate() {
            let s = ie.d - dot(&ie.c, v);
            let tol = SLACK_TOL * (1.0 + ie.d.abs() + norm2(&ie.c) * radius);
            if s < -tol {
                return Err(Error::NotNested {
                    vertex: i,
                    facet: j,
                    violation: -s,
                });
            }
            m.set(i, j, s.max(0.0));
        }
    }
    NonnegMatrix::new(m)
}

/// The 4x4 family whose rows are cyclic shifts of `(2-e, 2-e, e, e)`; it is
/// the slack matrix of the `(1-e)`-scaled square inside the `±1` square.
pub fn make_m_epsilon(eps: f64) -> Result<NonnegMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::DomainError(format!("epsilon {eps} outside [0, 1]")));
    }
    let big = 2.0 - eps;
    let base = [big, big, eps, eps];
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| base[(j + 4 - i) % 4]).collect())
        .collect();
    NonnegMatrix::from_rows(&rows)
}

/// The `±1` square, counterclockwise from `(1, 1)`.
pub fn unit_square() -> VPolytope {
    VPolytope::new(vec![
        vec![1.0, 1.0],
        vec![-1.0, 1.0],
        vec![-1.0, -1.0],
        vec![1.0, -1.0],
    ])
    .expect("static polygon")
}

/// Regular `v`-gon with vertices on the unit circle.
pub fn regular_polygon(v: usize) -> VPolytope {
    let pts = (0..v)
        .map(|t| {
            let a = 2.0 * std::f64::consts::PI * t as f64 / v as f64;
            vec![a.cos(), a.sin()]
        })
        .collect();
    VPolytope::new(pts).expect("distinct points")
}

/// Slack matrix of a full-dimensional polytope against its own facets.
pub fn polytope_slack(p: &VPolytope) -> Result<NonnegMatrix> {
    let reduced = p.reduced()?;
    slack_matrix(&reduced, &reduced.facets()?)
}

/// Polar `{y : p_i^T y <= 1}`; requires the origin in the interior of `P`.
pub fn polar(p: &VPolytope) -> Result<HPolyhedron> {
    if !origin_interior(p)? {
        return Err(Error::OriginNotInterior);
    }
    HPolyhedron::new(
        p.dim(),
        p.vertices()
            .iter()
            .map(|v| Inequality {
                c: v.clone(),
                d: 1.0,
            })
            .collect(),
    )
}

/// Whether the origin lies in the interior of `conv(P)`.
pub fn origin_interior(p: &VPolytope) -> Result<bool> {
    let n = p.dim();
    let scale = hull::point_scale(p.vertices());
    match n {
        1 => {
            let lo = p
                .vertices()
                .iter()
                .map(|v| v[0])
                .fold(f64::INFINITY, f64::min);
            let hi = p
                .vertices()
                .iter()
                .map(|v| v[0])
                .fold(f64::NEG_INFINITY, f64::max);
            let eps = 1e-12 * scale;
            Ok(lo < -eps && hi > eps)
        }
        2 => {
            // Winding test against the hull: strictly left of every edge.
            let h = convex_hull_2d(p.vertices(), 1e-12 * scale * scale);
            if h.len() < 3 {
                return Ok(false);
            }
            let o = [0.0, 0.0];
            let eps = 1e-12 * scale * scale;
            Ok((0..h.len())
                .all(|t| cross(&p.vertices()[h[t]], &p.vertices()[h[(t + 1) % h.len()]], &o) > eps))
        }
        _ => origin_interior_lmi(p),
    }
}

/// Higher-dimensional interior test: the origin is interior iff the points
/// affinely span `R^n` and `0 = sum lambda_i p_i` with `lambda > 0`,
/// `sum lambda = 1`. Positivity margin is maximized with the LMI engine over
/// the affine solution set of the equalities (all blocks 1x1).
fn origin_interior_lmi(p: &VPolytope) -> Result<bool> {
    let n = p.dim();
    let v = p.len();
    let a = DenseMatrix::from_fn(
        n + 1,
        v,
        |i, j| {
            if i < n {
                p.vertices()[j][i]
            } else {
                1.0
            }
        },
    );
    if matrix_rank(&a, 1e-9)? != n + 1 {
        return Ok(false);
    }
    let mut rhs = vec![0.0; n + 1];
    rhs[n] = 1.0;
    let (lambda0, res) = lstsq(&a, &rhs, RANK_TOL)?;
    if res > 1e-9 {
        return Ok(false);
    }
    let ns = null_space(&a, 1e-9)?;
    let m = ns.cols();
    let mut prob = LmiProblem::new(m);
    for i in 0..v {
        let coeffs: Vec<f64> = (0..m).map(|l| ns.get(i, l)).collect();
        prob.add_scalar(lambda0[i], &coeffs)?;
    }
    let opts = SolveOptions::default();
    let out = lmifeas::solve(&prob, &opts);
    Ok(matches!(out.status, FeasStatus::Feasible(_)) && out.margin > 1e-9 / v as f64)
}

/// Boundedness of a planar polyhedron: the outer normals must positively
/// span the plane, i.e. every angular gap between consecutive normal
/// directions is below `pi`.
pub fn is_bounded(q: &HPolyhedron) -> Result<bool> {
    if q.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "boundedness test is planar, got dimension {}",
            q.dim()
        )));
    }
    let mut angles: Vec<f64> = q
        .inequalities()
        .iter()
        .filter(|ie| ie.c.iter().any(|&x| x != 0.0))
        .map(|ie| ie.c[1].atan2(ie.c[0]))
        .collect();
    if angles.len() < 3 {
        return Ok(false);
    }
    angles.sort_by(f64::total_cmp);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut max_gap = angles[0] + two_pi - angles[angles.len() - 1];
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    Ok(max_gap < std::f64::consts::PI - 1e-12)
}
