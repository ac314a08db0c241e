//! Affine normalization of hexagons and their lift to a biplanar octahedron.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyform::{cross, VPolytope};
use crate::symcore::DenseMatrix;

const COPLANAR_TOL: f64 = 1e-9;

/// `x -> lin * x + shift` on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub lin: [[f64; 2]; 2],
    pub shift: [f64; 2],
}

impl AffineMap2 {
    pub fn apply(&self, x: &[f64]) -> [f64; 2] {
        [
            self.lin[0][0] * x[0] + self.lin[0][1] * x[1] + self.shift[0],
            self.lin[1][0] * x[0] + self.lin[1][1] * x[1] + self.shift[1],
        ]
    }

    pub fn inverse(&self) -> Option<AffineMap2> {
        let [[p, q], [r, s]] = self.lin;
        let det = p * s - q * r;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let lin = [[s / det, -q / det], [-r / det, p / det]];
        let shift = [
            -(lin[0][0] * self.shift[0] + lin[0][1] * self.shift[1]),
            -(lin[1][0] * self.shift[0] + lin[1][1] * self.shift[1]),
        ];
        Some(AffineMap2 { lin, shift })
    }
}

/// Hexagon with vertices `(1,0), (a,b), (0,1), (c,d), (0,0), (e,f)` in
/// counterclockwise order, and the map taking the input there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HexagonCanonical {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    #[serde(rename = "T")]
    pub t: AffineMap2,
    /// Input vertex order was clockwise and has been reversed.
    pub reversed: bool,
}

impl HexagonCanonical {
    pub fn params(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    /// `(a,b)` in the open first quadrant with `a + b > 1`, `(c,d)` in the
    /// second with `c + d < 1`, `(e,f)` in the fourth with `e + f < 1`.
    pub fn quadrant_conditions_hold(&self) -> bool {
        self.a > 0.0
            && self.b > 0.0
            && self.a + self.b > 1.0
            && self.c < 0.0
            && self.d > 0.0
            && self.c + self.d < 1.0
            && self.e > 0.0
            && self.f < 0.0
            && self.e + self.f < 1.0
    }

    pub fn vertices(&self) -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 0.0],
            vec![self.a, self.b],
            vec![0.0, 1.0],
            vec![self.c, self.d],
            vec![0.0, 0.0],
            vec![self.e, self.f],
        ]
    }
}

/// Octahedron `(0,0,0), (1,0,0), (0,1,0), (0,0,1), (v1,0,v3), (0,w2,w3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Octahedron {
    pub vertices: [[f64; 3]; 6],
    pub v1: f64,
    pub v3: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Octahedron {
    pub fn from_vertices(vertices: [[f64; 3]; 6]) -> Self {
        Octahedron {
            vertices,
            v1: vertices[4][0],
            v3: vertices[4][2],
            w2: vertices[5][1],
            w3: vertices[5][2],
        }
    }

    /// `v1 < 0 < v3`, `w2 < 0 < w3`, `v1 + v3 < 1`, `w2 + w3 < 1`.
    pub fn sign_conditions_hold(&self) -> bool {
        self.v1 < 0.0
            && self.v3 > 0.0
            && self.w2 < 0.0
            && self.w3 > 0.0
            && self.v1 + self.v3 < 1.0
            && self.w2 + self.w3 < 1.0
    }

    pub fn to_vpolytope(&self) -> Result<VPolytope> {
        VPolytope::new(self.vertices.iter().map(|v| v.to_vec()).collect())
    }
}

fn signed_area(v: &[Vec<f64>]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (p, q) = (&v[i], &v[(i + 1) % n]);
            p[0] * q[1] - p[1] * q[0]
        })
        .sum::<f64>()
        / 2.0
}

/// Affine map sending vertices 1, 3, 5 to `(1,0)`, `(0,1)`, `(0,0)`.
pub fn normalize_hexagon(h: &VPolytope) -> Result<HexagonCanonical> {
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "hexagon must be planar, got dimension {}",
            h.dim()
        )));
    }
    if h.len() != 6 {
        return Err(Error::WrongVertexCount {
            expected: 6,
            found: h.len(),
        });
    }
    let mut v: Vec<Vec<f64>> = h.vertices().to_vec();
    let reversed = signed_area(&v) < 0.0;
    if reversed {
        v[1..].reverse();
    }
    let scale = v
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut turning = 0.0;
    for i in 0..6 {
        let (p, q, r) = (&v[(i + 5) % 6], &v[i], &v[(i + 1) % 6]);
        let turn = cross(p, q, r);
        if turn.abs() <= 1e-12 * scale * scale {
            return Err(Error::CollinearVertices);
        }
        if turn < 0.0 {
            return Err(Error::NotConvex);
        }
        let e1 = [q[0] - p[0], q[1] - p[1]];
        let e2 = [r[0] - q[0], r[1] - q[1]];
        turning += (e1[0] * e2[1] - e1[1] * e2[0]).atan2(e1[0] * e2[0] + e1[1] * e2[1]);
    }
    // a star-shaped ordering turns by a multiple of 2 pi larger than one
    if (turning - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::NotConvex);
    }
    let o = &v[4];
    let c1 = [v[0][0] - o[0], v[0][1] - o[1]];
    let c3 = [v[2][0] - o[0], v[2][1] - o[1]];
    // inverse of the matrix with columns c1, c3
    let det = c1[0] * c3[1] - c3[0] * c1[1];
    let lin = [[c3[1] / det, -c3[0] / det], [-c1[1] / det, c1[0] / det]];
    let shift = [
        -(lin[0][0] * o[0] + lin[0][1] * o[1]),
        -(lin[1][0] * o[0] + lin[1][1] * o[1]),
    ];
    let t = AffineMap2 { lin, shift };
    let [a, b] = t.apply(&v[1]);
    let [c, d] = t.apply(&v[3]);
    let [e, f] = t.apply(&v[5]);
    let hc = HexagonCanonical {
        a,
        b,
        c,
        d,
        e,
        f,
        t,
        reversed,
    };
    if !hc.quadrant_conditions_hold() {
        return Err(Error::NotConvex);
    }
    Ok(hc)
}

/// Octahedron over the canonical hexagon and the map `[[1,0,a],[0,1,b]]`
/// projecting it onto the hexagon.
pub fn hex_octahedron_lift(hc: &HexagonCanonical) -> Result<(Octahedron, DenseMatrix)> {
    let HexagonCanonical {
        a, b, c, d, e, f, ..
    } = *hc;
    if a == 0.0 || b == 0.0 {
        return Err(Error::DegenerateParameters);
    }
    let v1 = c - a * d / b;
    let v3 = d / b;
    let w2 = f - b * e / a;
    let w3 = e / a;
    let oct = Octahedron::from_vertices([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [v1, 0.0, v3],
        [0.0, w2, w3],
    ]);
    let proj = DenseMatrix::from_rows(&[vec![1.0, 0.0, a], vec![0.0, 1.0, b]])?;
    Ok((oct, proj))
}

fn sub3(p: &[f64; 3], q: &[f64; 3]) -> [f64; 3] {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

fn cross3(u: &[f64; 3], w: &[f64; 3]) -> [f64; 3] {
    [
        u[1] * w[2] - u[2] * w[1],
        u[2] * w[0] - u[0] * w[2],
        u[0] * w[1] - u[1] * w[0],
    ]
}

fn dot3(u: &[f64; 3], w: &[f64; 3]) -> f64 {
    u[0] * w[0] + u[1] * w[1] + u[2] * w[2]
}

/// Looks for two distinct planes each containing four vertices. Returns the
/// unit normals of the first two found (sign fixed so the first nonzero
/// coordinate is positive).
pub fn is_biplanar(o: &Octahedron) -> (bool, Vec<[f64; 3]>) {
    let v = &o.vertices;
    let scale = v.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut planes: Vec<([f64; 3], f64)> = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            for k in j + 1..6 {
                for l in k + 1..6 {
                    let (e1, e2, e3) = (sub3(&v[j], &v[i]), sub3(&v[k], &v[i]), sub3(&v[l], &v[i]));
                    let det = dot3(&cross3(&e1, &e2), &e3);
                    if det.abs() > COPLANAR_TOL * scale.powi(3) {
                        continue;
                    }
                    // normal from the best-conditioned pair of edges
                    let cands = [cross3(&e1, &e2), cross3(&e1, &e3), cross3(&e2, &e3)];
                    let nrm = cands
                        .iter()
                        .copied()
                        .max_by(|x, y| dot3(x, x).total_cmp(&dot3(y, y)))
                        .expect("three candidates");
                    let len = dot3(&nrm, &nrm).sqrt();
                    if len <= COPLANAR_TOL * scale * scale {
                        continue;
                    }
                    let mut n = [nrm[0] / len, nrm[1] / len, nrm[2] / len];
                    let first = n.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
                    if first < 0.0 {
                        n = [-n[0], -n[1], -n[2]];
                    }
                    let off = dot3(&n, &v[i]);
                    let known = planes.iter().any(|(m, c)| {
                        (0..3).all(|t| (m[t] - n[t]).abs() < 1e-7) && (c - off).abs() < 1e-7 * scale
                    });
                    if !known {
                        planes.push((n, off));
                    }
                }
            }
        }
    }
    let normals: Vec<[f64; 3]> = planes.iter().take(2).map(|(n, _)| *n).collect();
    (planes.len() >= 2, normals)
}
