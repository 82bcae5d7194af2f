mod common;

use common::{counterexample, entry, max_abs};
use finsler_core::alphabeta::FamilyInstance;
use finsler_core::berwald::*;
use finsler_core::expr::{self, Expr, Params};
use finsler_core::geometry::{chern_rund, LagrangianDef, Tolerances};
use finsler_core::jets::Jet;
use finsler_core::Error;
use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

fn parse4(s: &str) -> Expr {
    expr::parse(s, 4, Vec::<String>::new()).unwrap()
}

#[test]
fn pseudo_riemannian_entries_are_berwald() {
    for name in ["minkowski4", "schwarzschild", "flrw-matter"] {
        let e = entry(name);
        for s in &e.default_samples {
            let sampling = DirectionSampling::around(s.xdot().to_vec());
            let v = detect_berwald(&e.def, s.x(), &sampling, &tol(), &mut rng()).unwrap();
            assert!(v.is_berwald, "{name}");
            assert!(
                v.max_gamma_deviation < 1e-10,
                "{name}: {}",
                v.max_gamma_deviation
            );
            assert_eq!(v.directions_tested, sampling.count);
            let gamma = chern_rund(&e.def, s, &tol()).unwrap();
            assert!(max_abs((&v.affine_connection.gamma - &gamma).iter()) < 1e-10);
        }
    }
}

#[test]
fn counterexample_is_berwald_with_the_expected_skew() {
    for (phi, want) in [
        ("x", [2.0, 0.0]),
        ("y", [0.0, 2.0]),
        ("x + 2*y", [2.0, 4.0]),
    ] {
        let e = counterexample(phi, 1.0, 0.0, 2.0);
        for s in &e.default_samples {
            let sampling = DirectionSampling::around(s.xdot().to_vec());
            let r = obstruction(&e.def, s.x(), &sampling, &tol(), &mut rng()).unwrap();
            assert!(r.verdict.max_gamma_deviation < 1e-7);
            assert!(
                (r.skew[[0, 2]].abs() - want[0]).abs() < 1e-5,
                "{phi}: {}",
                r.skew
            );
            assert!(
                (r.skew[[0, 3]].abs() - want[1]).abs() < 1e-5,
                "{phi}: {}",
                r.skew
            );
            for a in 0..4 {
                for b in 0..4 {
                    if !matches!((a.min(b), a.max(b)), (0, 2) | (0, 3)) {
                        assert!(r.skew[[a, b]].abs() < 1e-7);
                    }
                }
            }
            assert!(!r.metrizability_necessary_condition_met);
            assert!(
                r.phi_constancy_residual < 1e-7,
                "{}",
                r.phi_constancy_residual
            );
            assert!(r.hh_ricci_residual < 1e-7, "{}", r.hh_ricci_residual);
        }
    }
}

#[test]
fn constant_phi_gives_symmetric_ricci() {
    let e = counterexample("1.5", 1.0, 0.0, 2.0);
    for s in &e.default_samples {
        let sampling = DirectionSampling::around(s.xdot().to_vec());
        let r = obstruction(&e.def, s.x(), &sampling, &tol(), &mut rng()).unwrap();
        assert!(r.skew_max_abs < 1e-9);
        assert!(r.metrizability_necessary_condition_met);
    }
}

#[test]
fn non_parallel_one_form_is_not_berwald() {
    // Minkowski α with β = x1 dx0: ∇β is not of the Berwald form.
    let mut alpha = vec![vec![Expr::constant(0.0); 4]; 4];
    for (i, d) in [1.0, -1.0, -1.0, -1.0].into_iter().enumerate() {
        alpha[i][i] = Expr::constant(d);
    }
    let beta = vec![
        parse4("x1"),
        Expr::constant(0.0),
        Expr::constant(0.0),
        Expr::constant(0.0),
    ];
    let inst = FamilyInstance::new(alpha, beta, 1.0, 0.0, 0.5, None, Params::new()).unwrap();
    assert!(
        inst.check_berwald_condition(&[0.0, 1.0, 0.0, 0.0])
            .unwrap()
            .residual
            > 1e-3
    );
    let def = LagrangianDef::AlphaBeta(inst);
    let sampling = DirectionSampling::around(vec![1.0, 0.1, 0.2, 0.0]);
    let x = [0.0, 1.0, 0.3, 0.0];
    let v = detect_berwald(&def, &x, &sampling, &tol(), &mut rng()).unwrap();
    assert!(!v.is_berwald);
    assert!(v.max_gamma_deviation > 1e-4);
    let err = obstruction(&def, &x, &sampling, &tol(), &mut rng()).unwrap_err();
    assert!(matches!(err, Error::NotBerwald { .. }));
}

#[test]
fn null_seed_without_spread_finds_no_directions() {
    let e = entry("minkowski4");
    let sampling = DirectionSampling {
        spread: 0.0,
        max_attempts: 10,
        ..DirectionSampling::around(vec![1.0, 1.0, 0.0, 0.0])
    };
    let err = detect_berwald(&e.def, &[0.0; 4], &sampling, &tol(), &mut rng()).unwrap_err();
    assert!(matches!(
        err,
        Error::NoAdmissibleDirections { found: 0, .. }
    ));
}

#[test]
fn detection_is_reproducible_for_a_fixed_seed() {
    let e = entry("bogoslovsky");
    let s = &e.default_samples[0];
    let sampling = DirectionSampling::around(s.xdot().to_vec());
    let a = detect_berwald(&e.def, s.x(), &sampling, &tol(), &mut rng()).unwrap();
    let b = detect_berwald(&e.def, s.x(), &sampling, &tol(), &mut rng()).unwrap();
    assert_eq!(a, b);
    assert!(a.is_berwald);
}

#[test]
fn affine_ricci_of_simple_connections() {
    let zero = |x: &[Jet]| Ok(Array3::from_elem((3, 3, 3), x[0].scale(0.0)));
    assert_eq!(
        ricci_affine(&[0.2, 0.4, 0.1], zero).unwrap(),
        Array2::zeros((3, 3))
    );

    // Γ^0_11 = x0: R_11 = ∂_0 Γ^0_11 = 1 and everything else vanishes.
    let linear = |x: &[Jet]| {
        let mut g = Array3::from_elem((3, 3, 3), x[0].scale(0.0));
        g[[0, 1, 1]] = x[0].clone();
        Ok(g)
    };
    let r = ricci_affine(&[0.2, 0.4, 0.1], linear).unwrap();
    let mut want = Array2::zeros((3, 3));
    want[[1, 1]] = 1.0;
    assert_eq!(r, want);
}

#[test]
fn ricci_from_parts_contracts_riemann() {
    let e = counterexample("x + 2*y", 1.0, 0.0, 2.0);
    let s = &e.default_samples[1];
    let v = detect_berwald(
        &e.def,
        s.x(),
        &DirectionSampling::around(s.xdot().to_vec()),
        &tol(),
        &mut rng(),
    )
    .unwrap();
    let conn = &v.affine_connection;
    let riem = conn.riemann();
    let ricci = conn.ricci();
    for a in 0..4 {
        for b in 0..4 {
            let trace: f64 = (0..4).map(|m| riem[[m, a, m, b]]).sum();
            assert!((trace - ricci[[a, b]]).abs() < 1e-12);
        }
    }
    let through_field = ricci_affine(s.x(), conn.as_field()).unwrap();
    assert!(max_abs((&through_field - &ricci).iter()) < 1e-12);
}

fn schwarzschild_g() -> Vec<Vec<Expr>> {
    let mut g = vec![vec![Expr::constant(0.0); 4]; 4];
    g[0][0] = parse4("1 - 2/x1");
    g[1][1] = parse4("-1/(1 - 2/x1)");
    g[2][2] = parse4("-(x1^2)");
    g[3][3] = parse4("-(x1^2)*sin(x2)^2");
    g
}

#[test]
fn levi_civita_connection_has_no_nonmetricity() {
    let e = entry("schwarzschild");
    for s in &e.default_samples {
        let v = detect_berwald(
            &e.def,
            s.x(),
            &DirectionSampling::around(s.xdot().to_vec()),
            &tol(),
            &mut rng(),
        )
        .unwrap();
        let q = nonmetricity(&v.affine_connection, &schwarzschild_g(), &Params::new()).unwrap();
        assert!(q.q_norm < 1e-9, "{}", q.q_norm);
        assert!(q.direct_residual < 1e-9);
    }
}

#[test]
fn counterexample_connection_is_not_metric_for_alpha() {
    let e = counterexample("x", 1.0, 0.0, 2.0);
    let inst = e.def.family().unwrap().clone();
    for s in &e.default_samples {
        let v = detect_berwald(
            &e.def,
            s.x(),
            &DirectionSampling::around(s.xdot().to_vec()),
            &tol(),
            &mut rng(),
        )
        .unwrap();
        let q = nonmetricity(&v.affine_connection, &inst.alpha, &inst.params).unwrap();
        assert!(q.q_norm > 1e-3, "{}", q.q_norm);
        assert!(q.direct_residual < 1e-8, "{}", q.direct_residual);
    }
}

#[test]
fn quadratic_family_member_is_metric_for_alpha() {
    // p = 0, m = 0 makes L = c α.
    let e = counterexample("x", 2.0, 0.0, 0.0);
    let inst = e.def.family().unwrap().clone();
    for s in &e.default_samples {
        let v = detect_berwald(
            &e.def,
            s.x(),
            &DirectionSampling::around(s.xdot().to_vec()),
            &tol(),
            &mut rng(),
        )
        .unwrap();
        let q = nonmetricity(&v.affine_connection, &inst.alpha, &inst.params).unwrap();
        assert!(q.q_norm < 1e-9, "{}", q.q_norm);
    }
}

#[test]
fn nonmetricity_rejects_mismatched_reference() {
    let e = entry("minkowski4");
    let s = &e.default_samples[0];
    let v = detect_berwald(
        &e.def,
        s.x(),
        &DirectionSampling::around(s.xdot().to_vec()),
        &tol(),
        &mut rng(),
    )
    .unwrap();
    let small = vec![vec![Expr::constant(1.0)]];
    assert!(matches!(
        nonmetricity(&v.affine_connection, &small, &Params::new()),
        Err(Error::Dimension(_))
    ));
    let degenerate = vec![vec![Expr::constant(0.0); 4]; 4];
    assert!(nonmetricity(&v.affine_connection, &degenerate, &Params::new()).is_err());
}

#[test]
fn ill_conditioned_directions_are_skipped() {
    let e = counterexample("y", 1.0, -1.0, 2.0);
    let s = &e.default_samples[1];
    let strict = DirectionSampling {
        max_condition: 1.0,
        ..DirectionSampling::around(s.xdot().to_vec())
    };
    let err = detect_berwald(&e.def, s.x(), &strict, &tol(), &mut rng()).unwrap_err();
    assert!(matches!(
        err,
        Error::NoAdmissibleDirections { found: 0, .. }
    ));

    // This point has fibre directions close to the L = 0 cone within the
    // default spread; they must not spoil the verdict.
    for seed in 0..8 {
        let sampling = DirectionSampling::around(s.xdot().to_vec());
        let v = detect_berwald(
            &e.def,
            s.x(),
            &sampling,
            &tol(),
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        assert!(v.is_berwald, "seed {seed}: {}", v.max_gamma_deviation);
    }

    let flat = entry("minkowski4");
    let unit = DirectionSampling {
        max_condition: 1.0,
        ..DirectionSampling::around(vec![1.0, 0.2, 0.0, 0.0])
    };
    assert!(
        detect_berwald(&flat.def, &[0.0; 4], &unit, &tol(), &mut rng())
            .unwrap()
            .is_berwald
    );
}
