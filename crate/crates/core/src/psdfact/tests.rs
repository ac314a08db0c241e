use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::polyform::{pair_from_matrix, polytope_slack, regular_polygon, unit_square};

fn e(k: usize, i: usize) -> SymMatrix {
    let mut s = SymMatrix::zeros(k);
    s.set(i, i, 1.0);
    s
}

fn sc(v: f64) -> SymMatrix {
    SymMatrix::from_diag(&[v])
}

#[test]
fn verify_identity() {
    let m = NonnegMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let f = PsdFactorization::new(2, vec![e(2, 0), e(2, 1)], vec![e(2, 0), e(2, 1)]).unwrap();
    let r = verify_factorization(&m, &f, 1e-12).unwrap();
    assert!(r.pass);
    assert_eq!(r.max_residual, 0.0);
}

#[test]
fn verify_detects_residual() {
    let m = NonnegMatrix::from_rows(&[vec![1.0]]).unwrap();
    let f = PsdFactorization::new(1, vec![sc(2.0)], vec![sc(1.0)]).unwrap();
    let r = verify_factorization(&m, &f, 1e-6).unwrap();
    assert!(!r.pass);
    assert_eq!(r.max_residual, 1.0);
    let wide = NonnegMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
    assert!(matches!(
        verify_factorization(&wide, &f, 1e-6),
        Err(Error::DimensionMismatch(_))
    ));
    // a non-psd factor fails even with zero residual
    let f = PsdFactorization::new(1, vec![sc(-1.0)], vec![sc(-1.0)]).unwrap();
    assert!(!verify_factorization(&m, &f, 1e-6).unwrap().pass);
}

#[test]
fn concat_example() {
    let mut f1 = PsdFactorization::new(1, vec![sc(1.0)], vec![sc(1.0)]).unwrap();
    f1.residual = 0.0;
    let mut f2 = PsdFactorization::new(1, vec![sc(1.0)], vec![sc(2.0)]).unwrap();
    f2.residual = 0.0;
    let f = concat_factorizations(&f1, &f2).unwrap();
    assert_eq!(f.k(), 2);
    assert_eq!(f.row_factors()[0], SymMatrix::from_diag(&[1.0, 1.0]));
    assert_eq!(f.col_factors()[0], SymMatrix::from_diag(&[1.0, 0.0]));
    assert_eq!(f.col_factors()[1], SymMatrix::from_diag(&[0.0, 2.0]));
    let m = NonnegMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
    assert!(verify_factorization(&m, &f, 0.0).unwrap().pass);

    let two_rows = PsdFactorization::new(1, vec![sc(1.0), sc(1.0)], vec![]).unwrap();
    assert_eq!(
        concat_factorizations(&f1, &two_rows).unwrap_err(),
        Error::RowCountMismatch(1, 2)
    );
    // empty column block
    let empty = PsdFactorization::new(1, vec![sc(3.0)], vec![]).unwrap();
    let g = concat_factorizations(&f1, &empty).unwrap();
    assert_eq!(g.reconstruct().as_slice(), &[1.0]);
}

#[test]
fn transpose_and_scale() {
    let f = PsdFactorization::new(2, vec![e(2, 0), e(2, 1)], vec![e(2, 1), sc2()]).unwrap();
    let t = transpose_factorization(&f);
    assert_eq!(t.row_factors(), f.col_factors());
    assert_eq!(transpose_factorization(&t), f);
    assert!(t.reconstruct().sub(&f.reconstruct().transpose()).max_abs() == 0.0);

    let one = PsdFactorization::new(1, vec![sc(1.0)], vec![sc(1.0)]).unwrap();
    let s = scale_factorization(&one, &[2.0], &[3.0]).unwrap();
    assert_eq!(s.reconstruct().as_slice(), &[6.0]);
    let same = scale_factorization(&f, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
    assert_eq!(same.row_factors(), f.row_factors());
    assert_eq!(
        scale_factorization(&one, &[0.0], &[1.0]).unwrap_err(),
        Error::NonpositiveScalar(0.0)
    );
}

fn sc2() -> SymMatrix {
    SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap()
}

#[test]
fn json_form() {
    let f = PsdFactorization::new(1, vec![sc(1.0)], vec![sc(2.0)]).unwrap();
    let f = f
        .with_residual_against(&NonnegMatrix::from_rows(&[vec![2.0]]).unwrap())
        .unwrap();
    let v: serde_json::Value = serde_json::to_value(&f).unwrap();
    assert_eq!(v["k"], 1);
    assert_eq!(v["A"][0][0][0], 1.0);
    assert_eq!(v["residual"], 0.0);
    let back: PsdFactorization = serde_json::from_value(v).unwrap();
    assert_eq!(back, f);
    assert!(serde_json::from_str::<PsdFactorization>(r#"{"k":2,"A":[[[1.0]]],"B":[]}"#).is_err());
}

#[test]
fn search_square_k3() {
    let m = polytope_slack(&unit_square()).unwrap();
    let f = search_factorization(&m, 3, &SearchConfig::default()).expect("square has psd rank 3");
    assert!(
        verify_factorization(&m, &f, 1e-6 * m.max_entry())
            .unwrap()
            .pass
    );
    assert_eq!(f.k(), 3);
}

#[test]
fn search_pentagon_k4() {
    let m = polytope_slack(&regular_polygon(5)).unwrap();
    let f = search_factorization(&m, 4, &SearchConfig::default()).expect("pentagon has psd rank 4");
    assert!(
        verify_factorization(&m, &f, 1e-6 * m.max_entry())
            .unwrap()
            .pass
    );
}

#[test]
fn search_is_deterministic() {
    let m = polytope_slack(&regular_polygon(5)).unwrap();
    let cfg = SearchConfig {
        rng_seed: 3,
        ..SearchConfig::default()
    };
    let a = search_factorization(&m, 4, &cfg);
    let b = search_factorization(&m, 4, &SearchConfig { jobs: 1, ..cfg });
    assert_eq!(a, b);
}

#[test]
fn search_never_claims_too_small() {
    // the identity has psd rank 3; a size-1 search must fail
    let m = NonnegMatrix::new(crate::symcore::DenseMatrix::identity(3)).unwrap();
    let cfg = SearchConfig {
        restarts: 4,
        ..SearchConfig::default()
    };
    assert!(search_factorization(&m, 1, &cfg).is_none());
}

fn random_rank3(rng: &mut ChaCha8Rng, p: usize, q: usize) -> NonnegMatrix {
    let u = crate::symcore::DenseMatrix::from_fn(p, 3, |_, _| rng.random_range(0.0..1.0));
    let v = crate::symcore::DenseMatrix::from_fn(3, q, |_, _| rng.random_range(0.0..1.0));
    NonnegMatrix::new(u.matmul(&v)).unwrap()
}

#[test]
fn rank3_random_9x13() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_rank3(&mut rng, 9, 13);
    let f = rank3_upper_factorize(&m, &SearchConfig::default()).unwrap();
    assert!(f.k() <= 8);
    assert!(
        verify_factorization(&m, &f, 1e-6 * m.max_entry())
            .unwrap()
            .pass
    );
}

#[test]
fn rank3_hexagon_and_zero_column() {
    let hex = polytope_slack(&regular_polygon(6)).unwrap();
    let f = rank3_upper_factorize(&hex, &SearchConfig::default()).unwrap();
    assert!(f.k() <= 4);

    let mut rows = make_rows();
    for r in rows.iter_mut() {
        r.insert(2, 0.0);
    }
    let m = NonnegMatrix::from_rows(&rows).unwrap();
    let f = rank3_upper_factorize(&m, &SearchConfig::default()).unwrap();
    assert_eq!(f.col_factors()[2], SymMatrix::zeros(f.k()));
    assert!(
        verify_factorization(&m, &f, 1e-6 * m.max_entry())
            .unwrap()
            .pass
    );

    let full = NonnegMatrix::new(crate::symcore::DenseMatrix::identity(4)).unwrap();
    assert_eq!(
        rank3_upper_factorize(&full, &SearchConfig::default()).unwrap_err(),
        Error::RankMismatch {
            expected: 3,
            found: 4
        }
    );
}

fn make_rows() -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    random_rank3(&mut rng, 7, 5).as_dense().to_rows()
}

#[test]
fn denormalize_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = random_rank3(&mut rng, 5, 4).as_dense().to_rows();
    rows.push(vec![0.0; 4]);
    let m = NonnegMatrix::from_rows(&rows).unwrap();
    let pair = pair_from_matrix(&m).unwrap();
    let s = pair.reconstruct().unwrap();
    let f = diagonal_factorization(&s);
    let g = denormalize(&f, &pair).unwrap();
    assert!(verify_factorization(&m, &g, 1e-9).unwrap().pass);
}
