//! Small-dimension hull utilities: 2D convex hull, facet and vertex
//! enumeration by brute force over `n`-subsets (inputs here have at most a
//! few dozen points, and dimension at most 3).

use crate::symcore::{dot, lstsq, null_space, DenseMatrix, RANK_TOL};

/// `(b - a) x (c - a)`
pub fn cross(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Andrew's monotone chain. Returns indices of the strict hull vertices in
/// counterclockwise order; collinear boundary points are dropped.
pub fn convex_hull_2d(points: &[Vec<f64>], eps: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 {
                let n = hull.len();
                if cross(&points[hull[n - 2]], &points[hull[n - 1]], &points[i]) <= eps {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Scale used to turn absolute tolerances into relative ones.
pub fn point_scale(points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0)
}

/// Facet inequalities `c^T x <= d` (with `|c| = 1`) of the convex hull of a
/// full-dimensional point set, by brute force over `n`-subsets.
pub fn facets_bruteforce(points: &[Vec<f64>], eps: f64) -> Vec<(Vec<f64>, f64)> {
    let n = points[0].len();
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    let v = points.len();
    if v < n {
        return out;
    }
    loop {
        // Hyperplane through the subset: normal spans the null space of the
        // differences.
        let base = &points[subset[0]];
        let diffs = DenseMatrix::from_fn(n - 1, n, |i, j| points[subset[i + 1]][j] - base[j]);
        let ns = if n == 1 {
            DenseMatrix::identity(1)
        } else {
            null_space(&diffs, 1e-9).unwrap_or_else(|_| DenseMatrix::zeros(n, 0))
        };
        if ns.cols() == 1 {
            let mut c = ns.col(0);
            let d0 = dot(&c, base);
            let sides: Vec<f64> = points.iter().map(|p| dot(&c, p) - d0).collect();
            let pos = sides.iter().any(|&s| s > eps);
            let neg = sides.iter().any(|&s| s < -eps);
            if pos ^ neg {
                let mut d = d0;
                if pos {
                    c.iter_mut().for_each(|x| *x = -*x);
                    d = -d;
                }
                let dup = out.iter().any(|(c2, d2)| {
                    c2.iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-9) && (d2 - d).abs() < eps
                });
                if !dup {
                    out.push((c, d));
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < v - n + i {
                subset[i] += 1;
                for t in i + 1..n {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Vertices of a bounded polyhedron `{x : c_j^T x <= d_j}` by brute force
/// over `n`-subsets of tight constraints.
pub fn vertices_bruteforce(ineqs: &[(Vec<f64>, f64)], n: usize, eps: f64) -> Vec<Vec<f64>> {
    let f = ineqs.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if f < n {
        return out;
    }
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let a = DenseMatrix::from_fn(n, n, |i, j| ineqs[subset[i]].0[j]);
        let b: Vec<f64> = subset.iter().map(|&i| ineqs[i].1).collect();
        if let Ok((x, res)) = lstsq(&a, &b, RANK_TOL) {
            let full_rank = crate::symcore::matrix_rank(&a, 1e-9)
                .map(|r| r == n)
                .unwrap_or(false);
            if full_rank && res < eps {
                let feasible = ineqs.iter().all(|(c, d)| dot(c, &x) <= d + eps);
                let dup = out
                    .iter()
                    .any(|y| y.iter().zip(&x).all(|(s, t)| (s - t).abs() < 1e-9));
                if feasible && !dup {
                    out.push(x);
                }
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < f - n + i {
                subset[i] += 1;
                for t in i + 1..n {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}
