//! Gauss-Legendre quadrature of arbitrary order.
//!
//! Nodes are the roots of the degree-`n` Legendre polynomial, found by Newton
//! iteration on the three-term recurrence. Weights follow from the closed form
//! `w = 2 / ((1 - x^2) P'_n(x)^2)`. An `n`-point rule integrates polynomials of
//! degree `2n - 1` exactly on `[-1, 1]`; [`QuadratureRule::integrate`] maps it to
//! an arbitrary interval `[a, b]`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{ensure, finite, Result};

/// Largest order accepted by [`QuadratureRule::new`].
pub const MAX_ORDER: usize = 1024;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Evaluates `(P_n(x), P'_n(x))` with the Bonnet recurrence.
///
/// The derivative uses `P'_n = n (x P_n - P_{n-1}) / (x^2 - 1)` and is only
/// meaningful for `|x| < 1`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let k = k as f64;
        let p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// An `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the rule of the given order (`1..=1024`).
    pub fn new(order: usize) -> Result<Self> {
        ensure(
            (1..=MAX_ORDER).contains(&order),
            "quadrature order must lie in 1..=1024",
        )?;
        let n = order;
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        // Roots come in +/- pairs; solve for the non-negative half only.
        let half = n.div_ceil(2);
        for i in 1..=half {
            let mut x = libm::cos(PI * (i as f64 - 0.25) / (n as f64 + 0.5));
            for _ in 0..NEWTON_MAX_ITER {
                let (p, dp) = legendre(n, x);
                let step = p / dp;
                x -= step;
                if libm::fabs(step) <= NEWTON_TOL {
                    break;
                }
            }
            // Middle root of an odd rule is exactly zero.
            if n % 2 == 1 && i == half {
                x = 0.0;
            }
            let dp = legendre(n, x).1;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // i = 1 is the largest root.
            nodes[n - i] = x;
            nodes[i - 1] = -x;
            weights[n - i] = w;
            weights[i - 1] = w;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    ///
    /// The returned weights already carry the Jacobian `(b - a) / 2`.
    pub fn mapped(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        ensure(a < b, "integration interval requires a < b")?;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Ok(self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| (half * t + mid, half * w))
            .collect())
    }

    /// Approximates `\int_a^b f(x) dx`.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        ensure(a < b, "integration interval requires a < b")?;
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut sum = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            sum += w * finite(f(half * t + mid), "quadrature integrand")?;
        }
        finite(half * sum, "quadrature integrand")
    }
}

/// Memoizes rules by order.
///
/// Owned per consumer rather than global, so insertion never races.
#[derive(Debug, Default, Clone)]
pub struct RuleCache {
    rules: BTreeMap<usize, Arc<QuadratureRule>>,
}

impl RuleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, order: usize) -> Result<Arc<QuadratureRule>> {
        if let Some(rule) = self.rules.get(&order) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(QuadratureRule::new(order)?);
        self.rules.insert(order, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}
