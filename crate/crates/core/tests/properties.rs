use proptest::prelude::*;

use divstat_core::curvature::curvature_relation_residuals;
use divstat_core::expr::{parse, BinaryOp, Expr, Tape, UnaryOp};
use divstat_core::geodesic::{exp_map, IntegratorOpts};
use divstat_core::statstruct::{connection_coeffs, structure_residuals, ConnKind};
use divstat_core::ManifoldDef;

fn names() -> Vec<String> {
    vec!["x1".into(), "x2".into()]
}

/// Smooth expressions on [-1, 1]² without domain restrictions.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i32..=3).prop_map(|c| Expr::constant(c as f64 / 2.0)),
        (0usize..2).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(BinaryOp::Mul, a, b)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Sin, a)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Cos, a)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Neg, a)),
            inner.clone().prop_map(|a| Expr::unary(UnaryOp::Exp, Expr::unary(UnaryOp::Sin, a))),
            inner.clone().prop_map(|a| {
                let sq = Expr::binary(BinaryOp::Mul, a.clone(), a);
                Expr::binary(BinaryOp::Div, Expr::constant(1.0), Expr::binary(BinaryOp::Add, Expr::constant(1.0), sq))
            }),
            inner.clone().prop_map(|a| Expr::binary(BinaryOp::Pow, a, Expr::constant(2.0))),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_central_difference(e in smooth_expr(), x in point(), i in 0usize..2) {
        let d = e.diff(i).eval(&x).unwrap();
        let h = 1e-5;
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += h;
        xm[i] -= h;
        let fd = (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h);
        let scale = 1.0 + d.abs() + e.eval(&x).unwrap().abs();
        prop_assert!((d - fd).abs() <= 1e-5 * scale, "{} d={d} fd={fd}", e.display(&names()));
    }

    #[test]
    fn printed_form_parses_back(e in smooth_expr(), x in point()) {
        let printed = e.display(&names()).to_string();
        let back = parse(&printed, &names()).unwrap();
        let (a, b) = (e.eval(&x).unwrap(), back.eval(&x).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{printed}: {a} vs {b}");
        prop_assert_eq!(back.display(&names()).to_string(), printed);
    }

    #[test]
    fn tape_matches_tree(e in smooth_expr(), f in smooth_expr(), x in point()) {
        let tape = Tape::compile(&[e.clone(), f.diff(1)]);
        let out = tape.eval_vec(&x).unwrap();
        prop_assert_eq!(out[0].to_bits(), e.eval(&x).unwrap().to_bits());
        prop_assert_eq!(out[1].to_bits(), f.diff(1).eval(&x).unwrap().to_bits());
    }
}

/// A divisible structure with a random warped metric and potential.
fn random_manifold(a: f64, b: f64, c: f64, d: f64) -> ManifoldDef {
    let doc = format!(
        r#"{{"name": "warped", "dim": 2, "coords": ["x1", "x2"],
            "metric": [["exp({a}*x2)", "0.25*sin(x1)"], ["0.25*sin(x1)", "1 + x1^2"]],
            "sigma": "{b}*cos(x1*x2) + {c}*x1 - {d}*x2^2"}}"#
    );
    ManifoldDef::from_json_str(&doc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn structure_and_curvature_identities(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0, x in point()
    ) {
        let m = random_manifold(a, b, c, d);
        let s = structure_residuals(&m, &x).unwrap();
        prop_assert!(s.max() < 1e-10, "{s:?}");
        let r = curvature_relation_residuals(&m, &x).unwrap();
        prop_assert!(r.max() < 1e-10, "{r:?}");
    }

    #[test]
    fn negating_sigma_swaps_the_connections(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0, x in point()
    ) {
        let m = random_manifold(a, b, c, d);
        let conj = m.with_negated_sigma();
        let back = conj.with_negated_sigma();
        prop_assert_eq!(back.name(), m.name());
        prop_assert_eq!(back.sigma_at(&x).unwrap(), m.sigma_at(&x).unwrap());
        let bar = connection_coeffs(&m, &x, ConnKind::NablaBar).unwrap().gamma;
        let hat = connection_coeffs(&conj, &x, ConnKind::Nabla).unwrap().gamma;
        prop_assert!(bar.as_slice().iter().zip(hat.as_slice()).all(|(u, v)| (u - v).abs() < 1e-13));
    }

    #[test]
    fn exp_map_is_homogeneous(
        a in -1.0f64..1.0, b in -1.0f64..1.0, x in point(), v in prop::collection::vec(-0.5f64..0.5, 2), k in 0.2f64..1.0
    ) {
        // exp(k v) equals the geodesic with velocity v stopped at time k
        let m = random_manifold(a, b, 0.3, 0.2);
        let opts = IntegratorOpts::default();
        let kv: Vec<f64> = v.iter().map(|c| c * k).collect();
        let lhs = exp_map(&m, ConnKind::Nabla, &x, &kv, &opts).unwrap();
        let path = divstat_core::geodesic::integrate_geodesic(&m, ConnKind::Nabla, &x, &v, k, &opts).unwrap();
        let rhs = &path.end.x;
        prop_assert!(lhs.iter().zip(rhs).all(|(p, q)| (p - q).abs() < 1e-8), "{lhs:?} vs {rhs:?}");
    }
}
