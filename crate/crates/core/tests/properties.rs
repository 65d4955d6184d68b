use std::collections::BTreeMap;

use proptest::prelude::*;

use cyclecert_core::expr::Expr;
use cyclecert_core::model::{PlanarSystem, Window};

/// Random expression source over `x`, `y` and `a`, smooth everywhere.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("a".to_string()),
        (-3.0f64..3.0).prop_map(|c| format!("({c})")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.prop_map(|a| format!("exp(({a})/10)")),
        ]
    })
}

fn params() -> BTreeMap<String, f64> {
    BTreeMap::from([("a".to_string(), 0.7)])
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 500,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn dual_partials_match_central_differences(
        text in expr_text(),
        x in -1.5f64..1.5,
        y in -1.5f64..1.5,
    ) {
        let e = Expr::parse(&text, &params()).unwrap();
        let d = e.eval_dual(x, y).unwrap();
        prop_assert!(close(d.value, e.eval(x, y).unwrap(), 1e-14));
        let h = 1e-5;
        let fx = (e.eval(x + h, y).unwrap() - e.eval(x - h, y).unwrap()) / (2.0 * h);
        let fy = (e.eval(x, y + h).unwrap() - e.eval(x, y - h).unwrap()) / (2.0 * h);
        prop_assert!(close(d.dx, fx, 1e-6), "{text}: dx {} vs {fx}", d.dx);
        prop_assert!(close(d.dy, fy, 1e-6), "{text}: dy {} vs {fy}", d.dy);
    }

    #[test]
    fn printed_form_parses_back(text in expr_text(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let e = Expr::parse(&text, &params()).unwrap();
        let printed = e.to_string();
        let back = Expr::parse(&printed, &params()).unwrap();
        prop_assert_eq!(back.to_string(), printed);
        prop_assert_eq!(back.eval(x, y).unwrap().to_bits(), e.eval(x, y).unwrap().to_bits());
    }

    #[test]
    fn v_dot_is_minus_y_squared_phi(text in expr_text(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let sys = PlanarSystem::from_strings(&text, "x", &params(), Window::default()).unwrap();
        let p = [x, y];
        let expected = -y * y * sys.damping(p).unwrap();
        prop_assert!(close(sys.v_dot(p).unwrap(), expected, 1e-12));
    }

    #[test]
    fn a_field_on_axes(text in expr_text(), r in -3.0f64..3.0) {
        let sys = PlanarSystem::from_strings(&text, "x", &params(), Window::default()).unwrap();
        prop_assert_eq!(sys.a_field([r, 0.0]).unwrap(), r * r);
        prop_assert_eq!(sys.a_field([0.0, r]).unwrap(), r * r);
    }

    #[test]
    fn transform_round_trip(x in -4.0f64..4.0) {
        let sys = PlanarSystem::from_strings("x^2 + y^2 - 1", "x + x^3", &params(), Window::default()).unwrap();
        let tr = sys.transform();
        let u = tr.alpha(x).unwrap();
        prop_assert!(u * x >= 0.0);
        prop_assert!((tr.beta(u).unwrap() - x).abs() <= 1e-9 * (1.0 + x.abs()));
    }
}
