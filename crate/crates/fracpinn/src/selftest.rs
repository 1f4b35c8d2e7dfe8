//! Numerical self-checks: quadrature exactness, L1 convergence order and
//! gradient fidelity of the trainer's losses.

use fracpinn_core::selfcheck::{
    gradient_audit, l1_convergence_orders, quadrature_exactness, AuditConfig,
};
use fracpinn_core::{Problem, Result};

pub const QUADRATURE_TOL: f64 = 1e-12;
pub const L1_GRIDS: [usize; 5] = [64, 128, 256, 512, 1024];
pub const L1_ALPHAS: [f64; 3] = [0.3, 0.5, 0.7];
pub const L1_ORDER_BAND: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub fn quadrature_check() -> Result<Check> {
    let worst = quadrature_exactness(1..=64)?;
    Ok(Check {
        name: "quadrature exactness n=1..64".into(),
        passed: worst <= QUADRATURE_TOL,
        detail: format!("worst monomial error {worst:.3e} (tol {QUADRATURE_TOL:e})"),
    })
}

pub fn l1_check(alpha: f64) -> Result<Check> {
    let orders = l1_convergence_orders(2, alpha, &L1_GRIDS)?;
    let target = 2.0 - alpha;
    let passed = orders.iter().all(|p| (p - target).abs() <= L1_ORDER_BAND);
    let shown: Vec<String> = orders.iter().map(|p| format!("{p:.3}")).collect();
    Ok(Check {
        name: format!("L1 order u=t^2 alpha={alpha}"),
        passed,
        detail: format!(
            "orders [{}] vs {target:.2} +/- {L1_ORDER_BAND}",
            shown.join(", ")
        ),
    })
}

pub fn gradient_check(name: &str, problem: &Problem, cfg: &AuditConfig) -> Result<Check> {
    let r = gradient_audit(problem, cfg)?;
    Ok(Check {
        name: format!("gradient audit {name}"),
        passed: r.passed(),
        detail: format!(
            "{} cases, {} parameters compared, {} failures, worst relative {:.2e}",
            r.cases, r.compared, r.failures, r.worst_relative
        ),
    })
}

/// Gradient audits on every benchmark problem.
pub fn gradient_checks(cfg: &AuditConfig) -> Result<Vec<Check>> {
    Ok(vec![
        gradient_check("ex1 nu=0.5", &Problem::example1(0.5)?, cfg)?,
        gradient_check("ex2", &Problem::example2(), cfg)?,
        gradient_check("ex3 alpha=0.5", &Problem::example3(0.5)?, cfg)?,
    ])
}

pub fn all_checks() -> Result<Vec<Check>> {
    let mut checks = vec![quadrature_check()?];
    for a in L1_ALPHAS {
        checks.push(l1_check(a)?);
    }
    checks.extend(gradient_checks(&AuditConfig::default())?);
    Ok(checks)
}
