use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::lmifeas::verify_point;
use crate::polyform::{
    make_m_epsilon, pair_from_matrix, polytope_slack, unit_square, NestedPair, VPolytope,
};
use crate::psdfact::verify_factorization;
use crate::symcore::{min_eig, svec, DenseMatrix};

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn disk_pair() -> NestedPair {
    let p = unit_square().scaled(H);
    let q = unit_square().facets().unwrap();
    NestedPair {
        inner: p,
        outer: q,
        row_scalings: vec![1.0; 4],
        translation: vec![0.0, 0.0],
        zero_rows: vec![],
        zero_cols: vec![],
        source_shape: (4, 4),
        kept_rows: (0..4).collect(),
        kept_cols: (0..4).collect(),
    }
}

fn unit_triangle_slack() -> NonnegMatrix {
    let t = VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    polytope_slack(&t).unwrap()
}

#[test]
fn disk_s_procedure_block() {
    let h = facet_matrix(&[1.0, 0.0], 1.0);
    assert_eq!(h.get(0, 2), -0.5);
    assert_eq!(h.get(2, 0), -0.5);
    assert_eq!(h.get(2, 2), 1.0);
    let mut blk = SymMatrix::from_diag(&[1.0, 1.0, -1.0]);
    blk.axpy(2.0, &h);
    let e = crate::symcore::eig_sym(&blk).unwrap();
    assert!(e.values[0].abs() < 1e-15 && e.values[0] >= -1e-15);

    let sys = build_conic_system(&disk_pair()).unwrap();
    assert!(sys.q_bounded);
    assert_eq!(sys.problem.num_vars(), 9);
    assert_eq!(sys.problem.blocks().len(), 1 + 4 + 4 + 4);
    let y = [1.0, 1.0, 0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0];
    assert!(verify_point(&sys.problem, &y, 1e-12).unwrap());
    let cert = ConicCertificate::from_vars(&y);
    assert!(conic_violation(&cert, &disk_pair()).unwrap() <= 1e-12);
}

#[test]
fn conic_system_on_m_epsilon() {
    let opts = crate::lmifeas::SolveOptions::default();
    let feasible =
        build_conic_system(&pair_from_matrix(&make_m_epsilon(0.5).unwrap()).unwrap()).unwrap();
    assert!(crate::lmifeas::solve(&feasible.problem, &opts)
        .point()
        .is_some());
    let infeasible =
        build_conic_system(&pair_from_matrix(&make_m_epsilon(0.1).unwrap()).unwrap()).unwrap();
    assert!(matches!(
        crate::lmifeas::solve(&infeasible.problem, &opts).status,
        crate::lmifeas::FeasStatus::Infeasible(_)
    ));
}

#[test]
fn decide_examples() {
    let m = make_m_epsilon(0.3).unwrap();
    let v = decide_rank2(&m).unwrap();
    assert!(v.is_yes(), "{:?}", v.diagnostics);
    let f = v.factorization.as_ref().unwrap();
    assert_eq!(f.k(), 2);
    assert!(verify_factorization(&m, f, 1e-8).unwrap().pass);

    assert!(!decide_rank2(&make_m_epsilon(0.25).unwrap())
        .unwrap()
        .is_yes());
    let v = decide_rank2(&make_m_epsilon(0.1).unwrap()).unwrap();
    assert!(v.is_no());
    assert!(!decide_rank2(&unit_triangle_slack()).unwrap().is_yes());

    let rank4 = NonnegMatrix::new(DenseMatrix::identity(4)).unwrap();
    assert_eq!(
        decide_rank2(&rank4).unwrap_err(),
        Error::RankMismatch {
            expected: 3,
            found: 4
        }
    );
}

#[test]
fn threshold_sweep() {
    for t in 0..20 {
        let eps = 0.05 * t as f64;
        if ((1.0 - eps) - H).abs() < 1e-3 {
            continue;
        }
        let v = decide_rank2(&make_m_epsilon(eps).unwrap()).unwrap();
        assert_eq!(v.is_yes(), 1.0 - eps <= H, "eps = {eps}: {}", v.label());
    }
}

#[test]
fn s_procedure_spot_check() {
    let m = make_m_epsilon(0.3).unwrap();
    let pair = pair_from_matrix(&m).unwrap();
    let v = decide_rank2(&m).unwrap();
    let Answer::Yes {
        certificate: Certificate::Conic(cert),
    } = v.answer
    else {
        panic!("expected a conic certificate");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (ie, &mu) in pair.outer.inequalities().iter().zip(&cert.mu) {
        let mut blk = cert.omega.clone();
        blk.axpy(mu, &facet_matrix(&ie.c, ie.d));
        for _ in 0..100 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let hom = blk.quad_form(&[x[0], x[1], 1.0]);
            let direct = cert.eval(&x) + mu * (ie.d - ie.c[0] * x[0] - ie.c[1] * x[1]);
            assert!((hom - direct).abs() < 1e-9 * (1.0 + direct.abs()));
            assert!(hom >= -1e-9 * (1.0 + x[0] * x[0] + x[1] * x[1]));
        }
    }
}

#[test]
fn disk_certificate_to_factorization() {
    let pair = disk_pair();
    let cert = ConicCertificate {
        omega: SymMatrix::from_diag(&[1.0, 1.0, -1.0]),
        mu: vec![2.0; 4],
    };
    let f = conic_to_factorization(&cert, &pair).unwrap();
    assert!(f.residual <= 1e-8);
    // vertex (h, h) and facet x <= 1 reproduce the hand factors
    let vi = pair
        .inner
        .vertices()
        .iter()
        .position(|v| v[0] > 0.0 && v[1] > 0.0)
        .unwrap();
    let want = SymMatrix::from_rows(&[vec![1.0 + H, H], vec![H, 1.0 - H]]).unwrap();
    assert!(f.row_factors()[vi].sub(&want).max_abs() < 1e-10);
    let fj = pair
        .outer
        .inequalities()
        .iter()
        .position(|ie| ie.c[0] > 0.5)
        .unwrap();
    assert!(
        f.col_factors()[fj]
            .sub(&SymMatrix::from_diag(&[0.0, 1.0]))
            .max_abs()
            < 1e-10
    );
}

#[test]
fn parabola_is_not_elliptic() {
    let cert = ConicCertificate {
        omega: SymMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5],
            vec![0.0, 0.5, -1.0],
        ])
        .unwrap(),
        mu: vec![1.0; 4],
    };
    assert_eq!(
        conic_to_factorization(&cert, &disk_pair()).unwrap_err(),
        Error::NotStrictlyElliptic
    );
}

#[test]
fn bilinear_counts_and_errors() {
    let sys = build_bilinear_system(&make_m_epsilon(0.3).unwrap(), 2).unwrap();
    assert_eq!(sys.num_unknowns(), 18);
    assert_eq!(sys.num_equations(), 9);
    assert_eq!(sys.num_psd_conditions(), 8);
    let rank4 = NonnegMatrix::new(DenseMatrix::identity(4)).unwrap();
    assert_eq!(
        build_bilinear_system(&rank4, 2).unwrap_err(),
        Error::RankMismatch {
            expected: 3,
            found: 4
        }
    );
}

#[test]
fn one_by_one() {
    let m = NonnegMatrix::from_rows(&[vec![1.0]]).unwrap();
    let sys = build_bilinear_system(&m, 1).unwrap();
    let u = sys.u.get(0, 0);
    // U = [1] up to sign, so K = L = [1] works when u = 1
    let one = DenseMatrix::identity(1);
    let cert = BilinearCertificate {
        l: one.scaled(u),
        k: one.scaled(u),
    };
    assert!(verify_bilinear(&cert, &sys, 1e-12).unwrap().pass);
    let f = certificate_to_factorization(&cert, &sys).unwrap();
    assert_eq!(f.row_factors()[0].get(0, 0), 1.0);
    assert_eq!(f.col_factors()[0].get(0, 0), 1.0);
}

fn planted(rng: &mut ChaCha8Rng, k: usize, p: usize, q: usize) -> NonnegMatrix {
    let mut psd = || {
        let g = DenseMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrize(&g.matmul(&g.transpose()))
    };
    let a: Vec<SymMatrix> = (0..p).map(|_| psd()).collect();
    let b: Vec<SymMatrix> = (0..q).map(|_| psd()).collect();
    NonnegMatrix::new(DenseMatrix::from_fn(p, q, |i, j| a[i].inner(&b[j]))).unwrap()
}

#[test]
fn identity_certificate_on_lifted_instance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = planted(&mut rng, 2, 5, 5);
    let mut sys = build_bilinear_system(&m, 2).unwrap();
    // replace U, V by svec images of psd factors
    let mut psd = || {
        let g = DenseMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        svec(&SymMatrix::symmetrize(&g.matmul(&g.transpose())))
    };
    sys.u = DenseMatrix::from_rows(&(0..5).map(|_| psd()).collect::<Vec<_>>()).unwrap();
    sys.v = DenseMatrix::from_cols(&(0..5).map(|_| psd()).collect::<Vec<_>>());
    let eye = DenseMatrix::identity(3);
    let cert = BilinearCertificate {
        l: eye.clone(),
        k: eye,
    };
    assert!(verify_bilinear(&cert, &sys, 1e-12).unwrap().pass);
}

#[test]
fn planted_bilinear_k2() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = planted(&mut rng, 2, 5, 5);
    let sys = build_bilinear_system(&m, 2).unwrap();
    let cert = solve_bilinear(&sys, &SearchConfig::default()).expect("planted instance");
    let rep = verify_bilinear(&cert, &sys, BILINEAR_TOL).unwrap();
    assert!(rep.pass);
    let f = extract_verified(&cert, &sys, &m).unwrap();
    assert_eq!(f.k(), 2);
    for a in f.row_factors() {
        assert!(min_eig(a).unwrap() >= -1e-12);
    }

    // a perturbed L is rejected with a located violation
    let mut bad = cert.clone();
    bad.l.set(0, 0, bad.l.get(0, 0) + 0.5);
    let rep = verify_bilinear(&bad, &sys, BILINEAR_TOL).unwrap();
    assert!(!rep.pass);
    assert!(rep.lk_residual > 0.1);
    assert!(matches!(
        certificate_to_factorization(&bad, &sys),
        Err(Error::UnverifiedCertificate(_))
    ));
}

#[test]
fn bilinear_on_m_epsilon_and_triangle() {
    let sys = build_bilinear_system(&make_m_epsilon(0.5).unwrap(), 2).unwrap();
    assert!(solve_bilinear(&sys, &SearchConfig::default()).is_some());
    let sys = build_bilinear_system(&unit_triangle_slack(), 2).unwrap();
    let cfg = SearchConfig {
        restarts: 8,
        ..SearchConfig::default()
    };
    assert!(solve_bilinear(&sys, &cfg).is_none());
}

#[test]
fn orchestrator() {
    let cfg = SearchConfig::default();
    assert!(min_psd_rank_decide(&make_m_epsilon(0.5).unwrap(), 2, &cfg)
        .unwrap()
        .is_yes());
    let cfg8 = SearchConfig {
        restarts: 8,
        ..SearchConfig::default()
    };
    assert!(!min_psd_rank_decide(&unit_triangle_slack(), 2, &cfg8)
        .unwrap()
        .is_yes());
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let m = planted(&mut rng, 3, 8, 8);
    let v = min_psd_rank_decide(&m, 3, &cfg).unwrap();
    assert!(v.is_yes(), "{:?}", v.diagnostics);
    let f = v.factorization.unwrap();
    assert_eq!(f.k(), 3);
    assert!(
        verify_factorization(&m, &f, 1e-6 * m.max_entry())
            .unwrap()
            .pass
    );
    assert!(matches!(
        min_psd_rank_decide(&m, 2, &cfg),
        Err(Error::RankMismatch {
            expected: 3,
            found: 6
        })
    ));
}

#[test]
fn verdict_json() {
    let v = decide_rank2(&make_m_epsilon(0.3).unwrap()).unwrap();
    let j = serde_json::to_value(&v).unwrap();
    assert_eq!(j["answer"], "Yes");
    assert!(j["certificate"]["omega"].is_array());
    let back: Verdict = serde_json::from_value(j).unwrap();
    assert_eq!(back.label(), "Yes");
}
