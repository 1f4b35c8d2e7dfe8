use fracpinn_core::quadrature::{legendre, MAX_ORDER};
use fracpinn_core::selfcheck::quadrature_exactness;
use fracpinn_core::{Error, QuadratureRule, RuleCache};
use proptest::prelude::*;

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn order_one_is_midpoint() {
    let rule = QuadratureRule::new(1).unwrap();
    assert_eq!(rule.nodes(), &[0.0]);
    assert_close(rule.weights()[0], 2.0, 1e-15);
}

#[test]
fn order_two_nodes_and_weights() {
    let rule = QuadratureRule::new(2).unwrap();
    let r = 1.0 / 3f64.sqrt();
    assert_close(rule.nodes()[0], -0.5773502691896257, 1e-15);
    assert_close(rule.nodes()[1], r, 1e-15);
    assert_close(rule.weights()[0], 1.0, 1e-15);
    assert_close(rule.weights()[1], 1.0, 1e-15);
}

#[test]
fn order_three_and_five_match_reference_tables() {
    let rule = QuadratureRule::new(3).unwrap();
    let r = (0.6f64).sqrt();
    for (got, want) in rule.nodes().iter().zip([-r, 0.0, r]) {
        assert_close(*got, want, 1e-15);
    }
    for (got, want) in rule.weights().iter().zip([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]) {
        assert_close(*got, want, 1e-15);
    }

    let rule = QuadratureRule::new(5).unwrap();
    let nodes = [
        -0.906179845938664,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.906179845938664,
    ];
    let weights = [
        0.23692688505618942,
        0.4786286704993662,
        0.568888888888889,
        0.4786286704993662,
        0.23692688505618942,
    ];
    for (got, want) in rule.nodes().iter().zip(nodes) {
        assert_close(*got, want, 1e-15);
    }
    for (got, want) in rule.weights().iter().zip(weights) {
        assert_close(*got, want, 1e-15);
    }
}

#[test]
fn five_points_integrate_degree_eight() {
    let rule = QuadratureRule::new(5).unwrap();
    let v = rule.integrate(|x| x.powi(8), -1.0, 1.0).unwrap();
    assert_close(v, 2.0 / 9.0, 1e-13);
}

#[test]
fn odd_cubic_vanishes() {
    let rule = QuadratureRule::new(2).unwrap();
    assert_close(
        rule.integrate(|x| x * x * x, -1.0, 1.0).unwrap(),
        0.0,
        1e-15,
    );
}

#[test]
fn fractional_power_on_unit_interval() {
    // x^1.5 is not smooth at 0, so 20 nodes leave an error of about 2.3e-8;
    // the reference value comes from an independent Gauss-Legendre table.
    let rule = QuadratureRule::new(20).unwrap();
    let v = rule.integrate(|x| x.powf(1.5), 0.0, 1.0).unwrap();
    assert_close(v - 0.4, -2.285_990_552_408_634e-8, 1e-15);
    assert_close(v, 0.4, 3e-8);
    let v = QuadratureRule::new(30)
        .unwrap()
        .integrate(|x| x.powf(1.5), 0.0, 1.0)
        .unwrap();
    assert_close(v, 0.4, 1e-8);
}

#[test]
fn four_hundred_points_on_half_interval() {
    let rule = QuadratureRule::new(400).unwrap();
    let v = rule.integrate(|t| t * t, 0.0, 0.5).unwrap();
    assert_close(v, 0.5f64.powi(3) / 3.0, 1e-12);
}

#[test]
fn exactness_up_to_degree_2n_minus_1() {
    let worst = quadrature_exactness([1, 2, 4, 8, 16, 32, 64]).unwrap();
    assert!(worst <= 1e-12, "worst error {worst:e}");
}

#[test]
fn one_degree_beyond_is_not_exact() {
    for n in [1, 2, 4, 8] {
        let rule = QuadratureRule::new(n).unwrap();
        let d = 2 * n as i32;
        let v = rule.integrate(|x| x.powi(d), -1.0, 1.0).unwrap();
        assert!((v - 2.0 / (d as f64 + 1.0)).abs() > 1e-6, "n = {n}");
    }
}

#[test]
fn structural_invariants_across_orders() {
    for n in (1..=64).chain([100, 257, 400, 777, MAX_ORDER]) {
        let rule = QuadratureRule::new(n).unwrap();
        let (x, w) = (rule.nodes(), rule.weights());
        assert_eq!(rule.order(), n);
        assert!(x.windows(2).all(|p| p[0] < p[1]), "n = {n} not increasing");
        assert!(x.iter().all(|v| v.abs() < 1.0));
        assert!(w.iter().all(|&v| v > 0.0));
        for i in 0..n {
            assert!((x[i] + x[n - 1 - i]).abs() <= 1e-14);
            assert!((w[i] - w[n - 1 - i]).abs() <= 1e-14);
        }
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() <= 1e-12, "n = {n} weight sum {total}");
        for &node in x {
            let (p, dp) = legendre(n, node);
            // Distance to the true root, in units of x.
            assert!((p / dp).abs() <= 2e-16, "n = {n} node {node}");
            if n <= 85 {
                assert!(p.abs() <= 1e-13, "n = {n} |P_n({node})| = {p:e}");
            }
        }
    }
}

#[test]
fn legendre_low_degrees() {
    for x in [-0.9, -0.3, 0.0, 0.4, 0.8] {
        assert_close(legendre(0, x).0, 1.0, 0.0);
        assert_close(legendre(1, x).0, x, 0.0);
        assert_close(legendre(2, x).0, 1.5 * x * x - 0.5, 1e-15);
        assert_close(legendre(3, x).0, 2.5 * x * x * x - 1.5 * x, 1e-15);
        assert_close(legendre(3, x).1, 7.5 * x * x - 1.5, 1e-14);
    }
}

#[test]
fn rejects_out_of_range_orders() {
    assert!(matches!(
        QuadratureRule::new(0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        QuadratureRule::new(MAX_ORDER + 1),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn rejects_empty_or_reversed_interval() {
    let rule = QuadratureRule::new(4).unwrap();
    assert!(matches!(
        rule.integrate(|x| x, 1.0, 1.0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        rule.integrate(|x| x, 2.0, 1.0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(rule.mapped(0.5, 0.5).is_err());
}

#[test]
fn non_finite_integrand_is_reported() {
    let rule = QuadratureRule::new(4).unwrap();
    let err = rule.integrate(|_| f64::NAN, 0.0, 1.0).unwrap_err();
    assert!(matches!(err, Error::NonFinite { .. }));
}

#[test]
fn construction_is_deterministic() {
    assert_eq!(
        QuadratureRule::new(137).unwrap(),
        QuadratureRule::new(137).unwrap()
    );
}

#[test]
fn mapped_weights_carry_the_jacobian() {
    let rule = QuadratureRule::new(6).unwrap();
    let mapped = rule.mapped(2.0, 5.0).unwrap();
    let total: f64 = mapped.iter().map(|(_, w)| w).sum();
    assert_close(total, 3.0, 1e-13);
    assert!(mapped.iter().all(|&(x, _)| x > 2.0 && x < 5.0));
}

#[test]
fn cache_returns_shared_rules() {
    let mut cache = RuleCache::new();
    assert!(cache.is_empty());
    let a = cache.get(32).unwrap();
    let b = cache.get(32).unwrap();
    assert!(std::sync::Arc::ptr_eq(&a, &b));
    cache.get(8).unwrap();
    assert_eq!(cache.len(), 2);
    assert!(cache.get(0).is_err());
    assert_eq!(cache.len(), 2);
}

proptest! {
    #[test]
    fn prop_exact_for_every_admissible_degree(n in 1usize..=64, frac in 0.0f64..1.0) {
        let d = ((2 * n - 1) as f64 * frac) as i32;
        let rule = QuadratureRule::new(n).unwrap();
        let v = rule.integrate(|x| x.powi(d), -1.0, 1.0).unwrap();
        let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
        prop_assert!((v - exact).abs() <= 1e-12);
    }

    #[test]
    fn prop_interval_transform(
        n in 1usize..=24,
        a in -3.0f64..3.0,
        len in 0.01f64..4.0,
        c in proptest::collection::vec(-2.0f64..2.0, 4),
    ) {
        let b = a + len;
        let rule = QuadratureRule::new(n).unwrap();
        let f = |x: f64| c[0] + c[1] * x + c[2] * (c[3] * x).sin();
        let direct = rule.integrate(f, a, b).unwrap();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let substituted = rule.integrate(|s| half * f(half * s + mid), -1.0, 1.0).unwrap();
        prop_assert!((direct - substituted).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn prop_polynomials_on_arbitrary_intervals(
        n in 1usize..=16,
        a in -2.0f64..2.0,
        len in 0.1f64..2.0,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 1..=32),
    ) {
        let b = a + len;
        let deg = (coeffs.len() - 1).min(2 * n - 1);
        let c = &coeffs[..=deg];
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let anti = |x: f64| {
            c.iter()
                .enumerate()
                .map(|(k, &ck)| ck * x.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum::<f64>()
        };
        let rule = QuadratureRule::new(n).unwrap();
        let v = rule.integrate(poly, a, b).unwrap();
        let exact = anti(b) - anti(a);
        prop_assert!((v - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }
}
