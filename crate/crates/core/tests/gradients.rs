//! Reverse-mode gradients of trainer losses against finite differences.

use fracpinn_core::selfcheck::{gradient_audit, AuditConfig, LossFamily};
use fracpinn_core::{IntegroForcing, Problem};

fn audit(problem: &Problem, seed: u64) {
    let cfg = AuditConfig {
        seed,
        ..AuditConfig::default()
    };
    let report = gradient_audit(problem, &cfg).unwrap();
    assert_eq!(report.cases, 100 * LossFamily::ALL.len());
    assert!(report.passed(), "{:?}: {report:?}", problem.id());
}

#[test]
fn fractional_ode() {
    audit(&Problem::example1(0.5).unwrap(), 1);
}

#[test]
fn fractional_ode_first_order_limit() {
    audit(&Problem::example1(1.0).unwrap(), 2);
}

#[test]
fn integro_differential() {
    audit(&Problem::example2(), 3);
    audit(&Problem::example2_with(IntegroForcing::AsPrinted), 4);
}

#[test]
fn time_fractional_pde() {
    audit(&Problem::example3(0.5).unwrap(), 5);
    audit(&Problem::example3(0.2).unwrap(), 6);
}

#[test]
fn family_weights_isolate_one_term() {
    let w = LossFamily::Boundary.weights();
    assert_eq!((w.residual, w.initial, w.boundary), (0.0, 0.0, 1.0));
    let w = LossFamily::Residual.weights();
    assert_eq!((w.residual, w.initial, w.boundary), (1.0, 0.0, 0.0));
}
