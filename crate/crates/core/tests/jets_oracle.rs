use finsler_core::expr::{self, BinaryOp, Expr, Params, UnaryOp};
use finsler_core::jets::{self, Jet};
use finsler_oracle::fd_partial;
use proptest::prelude::*;

const DIM: usize = 3;

fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..DIM).prop_map(Expr::coord),
        (-2.0..2.0f64).prop_map(|c| Expr::constant((c * 8.0).round() / 8.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Mul, a, b)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Sin, a)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Cos, a)),
            inner
                .clone()
                .prop_map(|a| Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Sin, a))),
            // a / (2 + cos b) stays away from the division pole
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(
                BinaryOp::Div,
                a,
                Expr::binary(
                    BinaryOp::Add,
                    Expr::constant(2.0),
                    Expr::unary(UnaryOp::Cos, b)
                )
            )),
            inner.clone().prop_map(|a| Expr::unary(
                UnaryOp::Sqrt,
                Expr::binary(
                    BinaryOp::Add,
                    Expr::constant(1.0),
                    Expr::binary(BinaryOp::Mul, a.clone(), a)
                )
            )),
            inner.prop_map(|a| Expr::binary(BinaryOp::Pow, a, Expr::constant(3.0))),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, DIM)
}

fn eval_f(e: &Expr) -> impl Fn(&[f64]) -> finsler_core::Result<f64> + '_ {
    move |x: &[f64]| expr::eval(e, x, &Params::new())
}

fn jet_at(e: &Expr, x: &[f64], order: usize) -> Jet {
    let v = jets::seed(x, &[0, 1, 2], order).unwrap();
    expr::eval(e, &v, &Params::new()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_and_second_partials_match_central_differences(e in smooth_expr(), x in point()) {
        let j = jet_at(&e, &x, 2);
        let f = eval_f(&e);
        for a in 0..DIM {
            let fd = fd_partial(&f, &x, &[a], Some(1e-5)).unwrap();
            let jv = j.partial(&[a]).unwrap();
            prop_assert!(close(jv, fd, 1e-5), "d{a}: jet {jv} fd {fd} for {e}");
            for b in a..DIM {
                let fd = fd_partial(&f, &x, &[a, b], None).unwrap();
                let jv = j.partial(&[a, b]).unwrap();
                prop_assert!(close(jv, fd, 1e-5), "d{a}{b}: jet {jv} fd {fd} for {e}");
            }
        }
    }

    #[test]
    fn higher_partials_match_differences_of_lower_jets(e in smooth_expr(), x in point()) {
        let j = jet_at(&e, &x, 4);
        for idx in [[0usize, 1, 2].as_slice(), &[0, 0, 1], &[2, 2, 2], &[0, 1, 1, 2], &[0, 0, 0, 0]] {
            let (last, head) = idx.split_last().unwrap();
            let lower = |y: &[f64]| -> finsler_core::Result<f64> { jet_at(&e, y, head.len()).partial(head) };
            let fd = fd_partial(lower, &x, &[*last], Some(1e-5)).unwrap();
            let jv = j.partial(idx).unwrap();
            prop_assert!(close(jv, fd, 1e-4), "{idx:?}: jet {jv} fd {fd} for {e}");
        }
    }

    #[test]
    fn sum_product_and_chain_rules_are_exact(e1 in smooth_expr(), e2 in smooth_expr(), x in point()) {
        let f = jet_at(&e1, &x, 4);
        let g = jet_at(&e2, &x, 4);
        let sum = jet_at(&Expr::binary(BinaryOp::Add, e1.clone(), e2.clone()), &x, 4);
        let prod = jet_at(&Expr::binary(BinaryOp::Mul, e1.clone(), e2.clone()), &x, 4);
        let comp = jet_at(&Expr::unary(UnaryOp::Sin, e1.clone()), &x, 4);
        let scale = f.coefficients().iter().chain(g.coefficients()).fold(1.0f64, |m, c| m.max(c.abs()));
        let tol = 1e-12 * scale.powi(2);
        for (a, b) in (&f + &g).coefficients().iter().zip(sum.coefficients()) {
            prop_assert!((a - b).abs() <= tol);
        }
        for (a, b) in (&f * &g).coefficients().iter().zip(prod.coefficients()) {
            prop_assert!((a - b).abs() <= tol);
        }
        for (a, b) in f.sin().coefficients().iter().zip(comp.coefficients()) {
            prop_assert!((a - b).abs() <= tol);
        }
        // product rule on first partials
        for v in 0..DIM {
            let lhs = (&f * &g).partial(&[v]).unwrap();
            let rhs = f.partial(&[v]).unwrap() * g.value() + f.value() * g.partial(&[v]).unwrap();
            prop_assert!((lhs - rhs).abs() <= tol);
        }
    }

    #[test]
    fn derivative_commutes_with_partial(e in smooth_expr(), x in point()) {
        let j = jet_at(&e, &x, 4);
        let d = j.derivative(1).derivative(0);
        for idx in [[0usize].as_slice(), &[2], &[1, 2]] {
            let mut full = idx.to_vec();
            full.extend([0, 1]);
            let a = d.partial(idx).unwrap();
            let b = j.partial(&full).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn printed_form_reparses(e in smooth_expr()) {
        // Parsed trees carry negative literals as negations, so start from one.
        let parsed = expr::parse(&e.to_string(), DIM, Vec::<String>::new()).unwrap();
        let back = expr::parse(&parsed.to_string(), DIM, Vec::<String>::new()).unwrap();
        prop_assert_eq!(back, parsed);
    }

    #[test]
    fn evaluation_is_pure(e in smooth_expr(), x in point()) {
        let a = jet_at(&e, &x, 3);
        let b = jet_at(&e, &x, 3);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn polynomials_are_exact() {
    let e = expr::parse(
        "x0^4 - 3*x0^2*x1*x2 + 2*x1^3 + x2",
        DIM,
        Vec::<String>::new(),
    )
    .unwrap();
    let j = jet_at(&e, &[1.5, -0.5, 2.0], 4);
    assert_eq!(j.partial(&[0, 0, 0, 0]).unwrap(), 24.0);
    assert_eq!(j.partial(&[0, 0, 1, 2]).unwrap(), -6.0);
    assert_eq!(j.partial(&[1, 1, 1]).unwrap(), 12.0);
    assert_eq!(j.partial(&[0, 1, 2]).unwrap(), -6.0 * 1.5);
}

#[test]
fn documented_partial_examples() {
    let x = jets::seed(&[0.7, -1.3], &[0, 1], 4).unwrap();
    assert_eq!((&x[0] * &x[0]).partial(&[0, 0]).unwrap(), 2.0);
    let f = &x[0] * &(&x[1] * &x[1]);
    assert_eq!(f.partial(&[0, 1, 1]).unwrap(), 2.0);
    let z = jets::seed(&[0.0], &[0], 4).unwrap();
    assert!((z[0].exp().partial(&[0, 0, 0, 0]).unwrap() - 1.0).abs() < 1e-15);
}
