use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::symcore::SymMatrix;

fn one(v: f64) -> SymMatrix {
    SymMatrix::from_diag(&[v])
}

#[test]
fn constant_identity_is_feasible() {
    let mut p = LmiProblem::new(0);
    p.add_block(vec![SymMatrix::identity(2)]).unwrap();
    let r = solve(&p, &SolveOptions::default());
    assert_eq!(r.status, FeasStatus::Feasible(vec![]));
    assert!((r.margin - 1.0).abs() < 1e-12);
}

#[test]
fn constant_negative_is_infeasible() {
    let mut p = LmiProblem::new(0);
    p.add_block(vec![one(-1.0)]).unwrap();
    let r = solve(&p, &SolveOptions::default());
    match r.status {
        FeasStatus::Infeasible(z) => {
            assert!((z[0].get(0, 0) - 1.0).abs() < 1e-9);
            assert!(verify_ray(&p, &z, 1e-9).unwrap());
        }
        s => panic!("expected infeasible, got {s:?}"),
    }
}

#[test]
fn interval_block() {
    let mut p = LmiProblem::new(1);
    p.add_block(vec![
        SymMatrix::from_diag(&[0.0, 1.0]),
        SymMatrix::from_diag(&[1.0, -1.0]),
    ])
    .unwrap();
    let r = solve(&p, &SolveOptions::default());
    let y = r.point().expect("feasible").to_vec();
    assert!((0.0..=1.0).contains(&y[0]));
    assert!((r.margin - 0.5).abs() < 1e-6);
    assert!(verify_point(&p, &[0.5], 1e-12).unwrap());
    assert!(!verify_point(&p, &[2.0], 1e-12).unwrap());
    assert!(verify_point(&p, &[0.5, 1.0], 1e-12).is_err());
}

#[test]
fn hand_farkas_pair() {
    // y >= 1 and -y >= 0
    let mut p = LmiProblem::new(1);
    p.add_scalar(-1.0, &[1.0]).unwrap();
    p.add_scalar(0.0, &[-1.0]).unwrap();
    assert!(verify_ray(&p, &[one(1.0), one(1.0)], 1e-9).unwrap());
    assert!(!verify_ray(&p, &[one(1.0), one(2.0)], 1e-9).unwrap());
    assert!(verify_ray(&p, &[one(1.0)], 1e-9).is_err());
    let r = solve(&p, &SolveOptions::default());
    assert!(matches!(r.status, FeasStatus::Infeasible(_)));
}

#[test]
fn feasible_problem_rejects_any_ray() {
    let mut p = LmiProblem::new(1);
    p.add_block(vec![
        SymMatrix::from_diag(&[0.0, 1.0]),
        SymMatrix::from_diag(&[1.0, -1.0]),
    ])
    .unwrap();
    for z in [[1.0, 1.0], [1.0, 0.0], [0.3, 2.0]] {
        assert!(!verify_ray(&p, &[SymMatrix::from_diag(&z)], 1e-9).unwrap());
    }
}

#[test]
fn target_margin_stops_early() {
    let mut p = LmiProblem::new(1);
    p.add_block(vec![
        SymMatrix::from_diag(&[0.0, 1.0]),
        SymMatrix::from_diag(&[1.0, -1.0]),
    ])
    .unwrap();
    let opts = SolveOptions {
        target_margin: Some(1e-7),
        ..SolveOptions::default()
    };
    let r = solve(&p, &opts);
    assert!(r.margin >= 1e-7);
}

#[test]
fn problem_json_roundtrip() {
    let mut p = LmiProblem::new(1);
    p.add_scalar(-1.0, &[1.0]).unwrap();
    let s = serde_json::to_string(&p).unwrap();
    let back: LmiProblem = serde_json::from_str(&s).unwrap();
    assert_eq!(p, back);
    assert!(serde_json::from_str::<LmiProblem>(r#"{"m":1,"blocks":[{"F":[[[1.0]]]}]}"#).is_err());
}

fn random_sym(rng: &mut ChaCha8Rng, k: usize) -> SymMatrix {
    SymMatrix::from_fn(k, |_, _| rng.random_range(-1.0..1.0))
}

fn random_pd(rng: &mut ChaCha8Rng, k: usize) -> SymMatrix {
    let g = crate::symcore::DenseMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    let mut s = SymMatrix::symmetrize(&g.matmul(&g.transpose()));
    s.axpy(0.1, &SymMatrix::identity(k));
    s
}

#[test]
fn planted_feasible_small_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let m = rng.random_range(1..6);
        let mut p = LmiProblem::new(m);
        let ystar: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        for _ in 0..rng.random_range(1..4) {
            let k = rng.random_range(1..5);
            let fl: Vec<SymMatrix> = (0..m).map(|_| random_sym(&mut rng, k)).collect();
            let mut f0 = random_pd(&mut rng, k);
            for (l, f) in fl.iter().enumerate() {
                f0.axpy(-ystar[l], f);
            }
            let mut mats = vec![f0];
            mats.extend(fl);
            p.add_block(mats).unwrap();
        }
        let r = solve(&p, &SolveOptions::default());
        let y = r.point().expect("planted problem must be feasible");
        assert!(verify_point(&p, y, 1e-9).unwrap());
        assert!(r.margin >= 0.0);
    }
}

#[test]
fn planted_infeasible_small_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut resolved = 0;
    for _ in 0..10 {
        let p = planted_infeasible(&mut rng);
        let r = solve(&p, &SolveOptions::default());
        match &r.status {
            FeasStatus::Feasible(_) => panic!("infeasible problem reported feasible"),
            FeasStatus::Infeasible(z) => {
                assert!(verify_ray(&p, z, 1e-9).unwrap());
                resolved += 1;
            }
            FeasStatus::Undetermined => {}
        }
    }
    assert!(resolved >= 9);
}

/// Blocks with `sum_b <F_l^b, Z_b> = 0` and `sum_b <F_0^b, Z_b> < 0` for a
/// planted positive definite `Z`.
pub(crate) fn planted_infeasible(rng: &mut ChaCha8Rng) -> LmiProblem {
    let m = rng.random_range(1..5);
    let nb = rng.random_range(1..4);
    let sizes: Vec<usize> = (0..nb).map(|_| rng.random_range(1..4)).collect();
    let z: Vec<SymMatrix> = sizes.iter().map(|&k| random_pd(rng, k)).collect();
    let znorm2: f64 = z.iter().map(|zb| zb.inner(zb)).sum();
    let project = |f: &mut Vec<SymMatrix>, target: f64| {
        let cur: f64 = f.iter().zip(&z).map(|(a, b)| a.inner(b)).sum();
        for (fb, zb) in f.iter_mut().zip(&z) {
            fb.axpy((target - cur) / znorm2, zb);
            // rounding residue would make degenerate blocks feasible far out
            *fb = SymMatrix::from_fn(fb.dim(), |i, j| {
                let v = fb.get(i, j);
                if v.abs() < 1e-12 {
                    0.0
                } else {
                    v
                }
            });
        }
    };
    let mut per_block: Vec<Vec<SymMatrix>> = vec![Vec::new(); nb];
    let mut f0: Vec<SymMatrix> = sizes.iter().map(|&k| random_sym(rng, k)).collect();
    project(&mut f0, -rng.random_range(0.1..1.0));
    for (b, f) in f0.into_iter().enumerate() {
        per_block[b].push(f);
    }
    for _ in 0..m {
        let mut fl: Vec<SymMatrix> = sizes.iter().map(|&k| random_sym(rng, k)).collect();
        project(&mut fl, 0.0);
        for (b, f) in fl.into_iter().enumerate() {
            per_block[b].push(f);
        }
    }
    let mut p = LmiProblem::new(m);
    for mats in per_block {
        p.add_block(mats).unwrap();
    }
    p
}
