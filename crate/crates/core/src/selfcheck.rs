//! Numerical self-checks: quadrature exactness, L1 convergence order and a
//! finite-difference audit of loss gradients.
//!
//! These back the test suites and the `selftest` command of the CLI.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};
use crate::fractional::{caputo_polynomial, L1Scheme};
use crate::network::Network;
use crate::problems::{Operators, Problem};
use crate::quadrature::{QuadratureRule, RuleCache};
use crate::trainer::{compute_loss, loss_and_gradient, sample_batch, LossWeights};

/// Largest absolute error of `n`-point rules on monomials of degree
/// `0..=2n-1` over `[-1, 1]`, for every `n` in `orders`.
pub fn quadrature_exactness(orders: impl IntoIterator<Item = usize>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in orders {
        let rule = QuadratureRule::new(n)?;
        for d in 0..2 * n {
            let exact = if d % 2 == 1 {
                0.0
            } else {
                2.0 / (d as f64 + 1.0)
            };
            let approx = rule.integrate(|x| libm::pow(x, d as f64), -1.0, 1.0)?;
            worst = worst.max(libm::fabs(approx - exact));
        }
    }
    Ok(worst)
}

/// Error of the L1 approximation of `D^alpha t^degree` at `t = 1` with `n`
/// intervals, against the closed form.
pub fn l1_error(degree: u32, alpha: f64, n: usize) -> Result<f64> {
    let scheme = L1Scheme::new(alpha, n, 1.0)?;
    let approx = scheme.apply(|t| libm::pow(t, f64::from(degree)))?;
    Ok(libm::fabs(approx - caputo_polynomial(degree, alpha, 1.0)?))
}

/// Observed convergence orders `log2(e_N / e_2N)` between consecutive
/// entries of `grids`, which must double at each step.
pub fn l1_convergence_orders(degree: u32, alpha: f64, grids: &[usize]) -> Result<Vec<f64>> {
    ensure(grids.len() >= 2, "need at least two grid sizes")?;
    ensure(
        grids.windows(2).all(|w| w[1] == 2 * w[0]),
        "grid sizes must double",
    )?;
    let errors = grids
        .iter()
        .map(|&n| l1_error(degree, alpha, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(errors.windows(2).map(|e| libm::log2(e[0] / e[1])).collect())
}

/// Loss term isolated by a gradient audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossFamily {
    Residual,
    Initial,
    Boundary,
}

impl LossFamily {
    pub const ALL: [LossFamily; 3] = [Self::Residual, Self::Initial, Self::Boundary];

    pub fn weights(self) -> LossWeights {
        let mut w = LossWeights {
            residual: 0.0,
            initial: 0.0,
            boundary: 0.0,
        };
        match self {
            Self::Residual => w.residual = 1.0,
            Self::Initial => w.initial = 1.0,
            Self::Boundary => w.boundary = 1.0,
        }
        w
    }
}

/// Settings of [`gradient_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    /// Random (network, batch) pairs per loss family.
    pub cases: usize,
    pub hidden: Vec<usize>,
    pub batch: usize,
    pub l1_points: usize,
    pub quad_order: usize,
    /// Finite-difference step.
    pub step: f64,
    pub rel_tol: f64,
    /// Gradients smaller than this are compared absolutely against it.
    pub abs_tol: f64,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            cases: 100,
            hidden: alloc::vec![6, 6],
            batch: 2,
            l1_points: 16,
            quad_order: 8,
            step: 1e-3,
            rel_tol: 1e-5,
            abs_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuditReport {
    pub cases: usize,
    pub compared: usize,
    pub failures: usize,
    pub worst_relative: f64,
    pub worst_absolute: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }

    fn merge(&mut self, other: &AuditReport) {
        self.cases += other.cases;
        self.compared += other.compared;
        self.failures += other.failures;
        self.worst_relative = self.worst_relative.max(other.worst_relative);
        self.worst_absolute = self.worst_absolute.max(other.worst_absolute);
    }
}

/// Compares reverse-mode gradients of trainer losses with fourth-order
/// central differences, parameter by parameter, for each loss family.
pub fn gradient_audit(problem: &Problem, config: &AuditConfig) -> Result<AuditReport> {
    let ops = Operators::new(
        problem,
        config.l1_points,
        config.quad_order,
        &mut RuleCache::new(),
    )?;
    let mut sizes = alloc::vec![problem.dim()];
    sizes.extend_from_slice(&config.hidden);
    sizes.push(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = AuditReport::default();
    for family in LossFamily::ALL {
        let weights = family.weights();
        for _ in 0..config.cases {
            let net = Network::init(&sizes, rng.gen())?;
            let batch = sample_batch(problem, config.batch, &mut rng);
            let (_, grad) = loss_and_gradient(&net, problem, &ops, &weights, &batch)?;
            let mut probe = net.clone();
            let mut loss_at = |i: usize, delta: f64| -> Result<f64> {
                let base = net.parameters()[i];
                probe.parameters_mut()[i] = base + delta;
                let v = compute_loss(&probe, problem, &ops, &weights, &batch)?.total;
                probe.parameters_mut()[i] = base;
                Ok(v)
            };
            let mut case = AuditReport {
                cases: 1,
                ..AuditReport::default()
            };
            let h = config.step;
            for (i, &ad) in grad.as_slice().iter().enumerate() {
                let fd = (8.0 * (loss_at(i, h)? - loss_at(i, -h)?)
                    - (loss_at(i, 2.0 * h)? - loss_at(i, -2.0 * h)?))
                    / (12.0 * h);
                let diff = libm::fabs(ad - fd);
                let scale = libm::fabs(ad).max(libm::fabs(fd));
                case.compared += 1;
                if scale < config.abs_tol {
                    case.worst_absolute = case.worst_absolute.max(diff);
                    if diff > config.abs_tol {
                        case.failures += 1;
                    }
                } else {
                    let rel = diff / scale;
                    case.worst_relative = case.worst_relative.max(rel);
                    if rel > config.rel_tol {
                        case.failures += 1;
                    }
                }
            }
            report.merge(&case);
        }
    }
    Ok(report)
}
