use fracpinn_core::{
    caputo_power, Error, ExactField, Field, IntegroForcing, Network, NetworkField, Operators,
    Point, Problem, ProblemId, RuleCache, Tape,
};
use proptest::prelude::*;

fn ops(problem: &Problem, l1: usize, quad: usize) -> Operators {
    Operators::new(problem, l1, quad, &mut RuleCache::new()).unwrap()
}

/// 101 interior evaluation points: `x = k / 101`, `k = 1..=101` (the
/// residual needs a positive fractional coordinate). The PDE pairs them with
/// `x = (k - 1) / 100`, so both coordinates sweep their whole range.
fn residual_grid(problem: &Problem) -> Vec<Point> {
    (1..=101)
        .map(|k| {
            let s = k as f64 / 101.0;
            match problem.id() {
                ProblemId::FracPde => Point::xt((k - 1) as f64 / 100.0, s),
                _ => Point::x(s),
            }
        })
        .collect()
}

fn max_exact_residual(problem: &Problem, l1: usize, quad: usize) -> f64 {
    let ops = ops(problem, l1, quad);
    residual_grid(problem)
        .into_iter()
        .map(|p| {
            problem
                .residual(&ExactField(problem), p, &ops)
                .unwrap()
                .abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn problem_ids_parse_and_print() {
    for id in ProblemId::ALL {
        assert_eq!(id.cli_name().parse::<ProblemId>().unwrap(), id);
        assert_eq!(id.to_string(), id.cli_name());
    }
    assert_eq!("frac_pde".parse::<ProblemId>().unwrap(), ProblemId::FracPde);
    assert!("ex4".parse::<ProblemId>().is_err());
}

#[test]
fn orders_are_validated() {
    assert!(Problem::example1(1.0).is_ok());
    assert!(matches!(
        Problem::example1(0.0),
        Err(Error::InvalidArgument(_))
    ));
    assert!(Problem::example1(1.01).is_err());
    assert!(Problem::example3(1.0).is_err());
    assert!(Problem::example3(0.0).is_err());
    assert_eq!(Problem::example2().alpha(), 0.5);
    assert_eq!(
        Problem::new(ProblemId::FracIntegro, 0.9).unwrap().alpha(),
        0.5
    );
}

#[test]
fn exact_solution_values() {
    let p = Problem::example1(1.0).unwrap();
    assert!((p.exact(Point::x(1.0)) - 0.5).abs() < 1e-15);
    let p = Problem::example1(0.5).unwrap();
    assert!((p.exact(Point::x(0.5)) - 0.265_961_520_267_621_8).abs() < 1e-15);
    assert!((p.exact(Point::x(0.5)) - 0.2659615203).abs() < 1e-10);
    let p = Problem::example2();
    assert_eq!(p.exact(Point::x(0.5)), 0.25);
    let p = Problem::example3(0.5).unwrap();
    assert!((p.exact(Point::xt(0.8, 0.5)) - 1.526_226_925_452_758).abs() < 1e-14);
}

#[test]
fn integro_forcing_coefficients() {
    let c = IntegroForcing::Consistent.coefficient();
    assert!((c - 8.0 / (3.0 * std::f64::consts::PI.sqrt())).abs() < 1e-15);
    assert!((c - 1.504_505_556_127_35).abs() < 1e-14);
    let c = IntegroForcing::AsPrinted.coefficient();
    assert!((c - 16.686_637_143_467_905).abs() < 1e-12);
    assert_eq!(Problem::example2().forcing(), IntegroForcing::Consistent);
}

#[test]
fn integral_of_exact_with_400_nodes() {
    let p = Problem::example2();
    let ops = ops(&p, 1000, 400);
    assert_eq!(ops.quad_order(), Some(400));
    let z = ops.integral(&ExactField(&p), Point::x(1.0), 0).unwrap();
    assert!((z - 1.0 / 3.0).abs() < 1e-12);
    let z = ops.integral(&ExactField(&p), Point::x(0.3), 0).unwrap();
    assert!((z - 0.009).abs() < 1e-14);
}

#[test]
fn integral_requires_an_integral_problem() {
    let p = Problem::example1(0.5).unwrap();
    let ops = ops(&p, 10, 10);
    assert_eq!(ops.quad_order(), None);
    assert!(ops.integral(&ExactField(&p), Point::x(0.5), 0).is_err());
}

#[test]
fn example1_exact_residual_at_midpoint() {
    let p = Problem::example1(0.5).unwrap();
    let r = p
        .residual(&ExactField(&p), Point::x(0.5), &ops(&p, 2048, 400))
        .unwrap();
    assert!(r.abs() <= 5e-3, "{r:e}");
}

#[test]
fn example2_exact_residual_at_midpoint() {
    let p = Problem::example2();
    let r = p
        .residual(&ExactField(&p), Point::x(0.5), &ops(&p, 2048, 400))
        .unwrap();
    assert!(r.abs() <= 1e-2, "{r:e}");
}

#[test]
fn printed_integro_forcing_does_not_admit_the_square() {
    let p = Problem::example2_with(IntegroForcing::AsPrinted);
    let r = p
        .residual(&ExactField(&p), Point::x(0.5), &ops(&p, 2048, 400))
        .unwrap();
    assert!(r.abs() > 1.0, "{r:e}");
}

#[test]
fn exact_residuals_on_high_resolution_grid() {
    for nu in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let p = Problem::example1(nu).unwrap();
        let r = max_exact_residual(&p, 4096, 128);
        assert!(r <= 5e-3, "nu {nu}: {r:e}");
    }
    let r = max_exact_residual(&Problem::example2(), 4096, 128);
    assert!(r <= 1e-2, "integro: {r:e}");
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let r = max_exact_residual(&Problem::example3(a).unwrap(), 4096, 128);
        assert!(r <= 1e-2, "pde alpha {a}: {r:e}");
    }
}

#[test]
fn first_order_limit_uses_the_classical_derivative() {
    let p = Problem::example1(1.0).unwrap();
    let ops = ops(&p, 7, 7);
    assert_eq!(ops.l1_points(), None);
    // psi = x^2 / 2 satisfies psi' + psi^2 = x + psi^2 exactly.
    for x in [0.1, 0.5, 0.9] {
        let r = p.residual(&ExactField(&p), Point::x(x), &ops).unwrap();
        assert!(r.abs() < 1e-14);
    }
}

#[test]
fn pde_substitution_oracle() {
    for a in [0.3, 0.5, 0.7] {
        let p = Problem::example3(a).unwrap();
        let scale = 2.0 * libm::tgamma(a + 1.0) / libm::tgamma(2.0 * a + 1.0);
        for i in 0..=20 {
            for j in 0..=20 {
                let (x, t) = (i as f64 / 20.0, j as f64 / 20.0);
                let pt = Point::xt(x, t);
                let dt_alpha = scale * caputo_power(2.0 * a, a, t).unwrap();
                assert!((dt_alpha - 2.0 * t.powf(a)).abs() <= 1e-10);
                let d = p.exact_derivs(pt, 0, 2).unwrap();
                assert!((x * d.d1 - 2.0 * x * x).abs() <= 1e-10);
                assert!((d.d2.unwrap() - 2.0).abs() <= 1e-10);
                let lhs = dt_alpha + x * d.d1 + d.d2.unwrap();
                assert!((lhs - p.forcing_term(pt)).abs() <= 1e-10, "({x}, {t})");
            }
        }
    }
}

#[test]
fn ode_forcing_matches_closed_form_caputo() {
    for nu in [0.2, 0.5, 0.8] {
        let p = Problem::example1(nu).unwrap();
        for x in [0.1, 0.4, 1.0] {
            let psi = p.exact(Point::x(x));
            let d = caputo_power(nu + 1.0, nu, x).unwrap() / libm::tgamma(nu + 2.0);
            assert!((d + psi * psi - p.forcing_term(Point::x(x))).abs() < 1e-13);
        }
    }
}

#[test]
fn initial_and_boundary_data_match_exact_solutions() {
    let samples: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    for p in [
        Problem::example1(0.4).unwrap(),
        Problem::example2(),
        Problem::example3(0.3).unwrap(),
        Problem::example3(0.5).unwrap(),
    ] {
        let init = p.initial_constraints(&samples);
        assert!(!init.is_empty());
        for c in init.iter().chain(&p.boundary_constraints(&samples)) {
            assert!((p.exact(c.point) - c.target).abs() <= 1e-14);
        }
    }
}

#[test]
fn constraint_shapes() {
    let ts = [0.2, 0.4, 0.6];
    let p = Problem::example3(0.5).unwrap();
    let b = p.boundary_constraints(&ts);
    assert_eq!(b.len(), 6);
    assert_eq!(b[0].point, Point::xt(0.0, 0.2));
    assert_eq!(b[1].point, Point::xt(1.0, 0.2));
    assert_eq!(p.initial_constraints(&ts)[2].point, Point::xt(0.6, 0.0));
    assert!(p.has_boundary());
    let p = Problem::example1(0.5).unwrap();
    assert!(p.boundary_constraints(&ts).is_empty());
    assert_eq!(p.initial_constraints(&ts).len(), 1);
    assert!(!p.has_boundary());
}

#[test]
fn exact_derivatives_match_finite_differences() {
    let h = 1e-5;
    for (p, pt) in [
        (Problem::example1(0.6).unwrap(), Point::x(0.4)),
        (Problem::example2(), Point::x(0.7)),
        (Problem::example3(0.3).unwrap(), Point::xt(0.3, 0.6)),
    ] {
        for wrt in 0..p.dim() {
            let shift = |d: f64| {
                let mut c = pt.coords().to_vec();
                c[wrt] += d;
                p.exact(Point::from_coords(&c).unwrap())
            };
            let fd = (shift(h) - shift(-h)) / (2.0 * h);
            let d = p.exact_derivs(pt, wrt, 2).unwrap();
            assert!((d.d1 - fd).abs() < 1e-8, "{:?} wrt {wrt}", p.id());
            let fd2 = (shift(1e-4) - 2.0 * shift(0.0) + shift(-1e-4)) / 1e-8;
            assert!((d.d2.unwrap() - fd2).abs() < 1e-5);
        }
    }
}

#[test]
fn residual_rejects_boundary_points_and_wrong_dimensions() {
    let p = Problem::example3(0.5).unwrap();
    let o = ops(&p, 10, 10);
    assert!(p
        .residual(&ExactField(&p), Point::xt(0.5, 0.0), &o)
        .is_err());
    assert!(p.residual(&ExactField(&p), Point::x(0.5), &o).is_err());
    let p = Problem::example1(0.5).unwrap();
    assert!(p
        .residual(&ExactField(&p), Point::x(0.0), &ops(&p, 10, 10))
        .is_err());
}

#[test]
fn residual_is_the_same_on_every_field() {
    for p in [
        Problem::example1(0.5).unwrap(),
        Problem::example1(1.0).unwrap(),
        Problem::example2(),
        Problem::example3(0.5).unwrap(),
    ] {
        let net = Network::init(&[p.dim(), 9, 9, 1], 21).unwrap();
        let o = ops(&p, 40, 12);
        let pt = if p.dim() == 2 {
            Point::xt(0.6, 0.45)
        } else {
            Point::x(0.45)
        };
        let plain = p.residual(&NetworkField(&net), pt, &o).unwrap();
        let tape = Tape::new(&net);
        let taped = p.residual(&&tape, pt, &o).unwrap();
        assert!((plain - taped.value()).abs() <= 1e-13 * plain.abs().max(1.0));
    }
}

#[test]
fn caputo_operator_grid_ends_at_the_sample() {
    // L1 is exact on linear functions, so D^a (x) = x^(1-a) / Gamma(2-a).
    struct Linear;
    impl Field for Linear {
        type Value = f64;
        fn value(&self, p: Point) -> fracpinn_core::Result<f64> {
            Ok(3.0 * p.coords()[1] + 1.0)
        }
        fn derivs(
            &self,
            _: Point,
            _: usize,
            _: u8,
        ) -> fracpinn_core::Result<fracpinn_core::Derivs<f64>> {
            unreachable!()
        }
        fn constant(&self, c: f64) -> f64 {
            c
        }
    }
    let p = Problem::example3(0.4).unwrap();
    let o = ops(&p, 25, 1);
    for t in [0.05, 0.5, 1.0] {
        let v = o.caputo(&Linear, Point::xt(0.3, t), 1).unwrap();
        let want = 3.0 * t.powf(0.6) / libm::tgamma(1.6);
        assert!((v - want).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn prop_pde_exact_residual_small(a in 0.05f64..0.95, x in 0.0f64..1.0, t in 0.01f64..1.0) {
        let p = Problem::example3(a).unwrap();
        let r = p.residual(&ExactField(&p), Point::xt(x, t), &ops(&p, 1024, 1)).unwrap();
        prop_assert!(r.abs() <= 1e-2);
    }

    #[test]
    fn prop_ode_exact_residual_small(nu in 0.05f64..=1.0, x in 0.01f64..1.0) {
        let p = Problem::example1(nu).unwrap();
        let r = p.residual(&ExactField(&p), Point::x(x), &ops(&p, 2048, 1)).unwrap();
        prop_assert!(r.abs() <= 5e-3);
    }
}
