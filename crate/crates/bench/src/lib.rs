//! Seeded inputs shared by the benchmarks.

use psdrank_core::polyform::{polytope_slack, regular_polygon};
use psdrank_core::{DenseMatrix, LmiProblem, NonnegMatrix, SymMatrix, VPolytope};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sym(rng: &mut ChaCha8Rng, k: usize) -> SymMatrix {
    SymMatrix::from_fn(k, |_, _| rng.random_range(-1.0..1.0))
}

/// Problem with `m` variables and `blocks` blocks of size `k`, strictly
/// feasible at a random point.
pub fn planted_lmi(rng: &mut ChaCha8Rng, m: usize, blocks: usize, k: usize) -> LmiProblem {
    let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut p = LmiProblem::new(m);
    for _ in 0..blocks {
        let coeffs: Vec<SymMatrix> = (0..m).map(|_| random_sym(rng, k)).collect();
        let mut f0 = SymMatrix::identity(k);
        for (c, yl) in coeffs.iter().zip(&y) {
            f0.axpy(-yl, c);
        }
        let mut mats = vec![f0];
        mats.extend(coeffs);
        p.add_block(mats).expect("consistent block sizes");
    }
    p
}

/// Slack matrix of a hexagon with jittered vertices.
pub fn hexagon_slack(rng: &mut ChaCha8Rng) -> NonnegMatrix {
    let base = regular_polygon(6);
    let pts: Vec<Vec<f64>> = base
        .vertices()
        .iter()
        .map(|v| v.iter().map(|x| x * rng.random_range(0.9..1.1)).collect())
        .collect();
    polytope_slack(&VPolytope::new(pts).expect("distinct vertices")).expect("convex hexagon")
}

/// Random nonnegative `p x q` matrix of rank 3.
pub fn rank3_matrix(rng: &mut ChaCha8Rng, p: usize, q: usize) -> NonnegMatrix {
    let u = DenseMatrix::from_fn(p, 3, |_, _| rng.random_range(0.0..1.0));
    let v = DenseMatrix::from_fn(3, q, |_, _| rng.random_range(0.0..1.0));
    NonnegMatrix::new(u.matmul(&v)).expect("nonnegative product")
}
