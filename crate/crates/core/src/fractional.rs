//! Caputo fractional derivatives of order `0 < alpha <= 1`.
//!
//! Two routes are provided: the closed form for power functions, used as an
//! oracle, and the L1 scheme, which approximates the derivative at `t_max`
//! from samples of `u` on a uniform grid over `[0, t_max]`.

use alloc::vec::Vec;

use crate::error::{ensure, finite, Result};

fn check_order(alpha: f64) -> Result<()> {
    ensure(
        alpha > 0.0 && alpha <= 1.0,
        "fractional order must lie in (0, 1]",
    )
}

/// Caputo derivative of `x^degree` at `x`.
///
/// Zero below `ceil(alpha)`, otherwise
/// `Gamma(degree + 1) / Gamma(degree + 1 - alpha) * x^(degree - alpha)`.
pub fn caputo_polynomial(degree: u32, alpha: f64, x: f64) -> Result<f64> {
    check_order(alpha)?;
    ensure(x >= 0.0, "Caputo derivative is taken for x >= 0")?;
    // ceil(alpha) == 1 on (0, 1].
    if degree == 0 {
        return Ok(0.0);
    }
    Ok(power_rule(f64::from(degree), alpha, x))
}

/// Caputo derivative of `x^power` for a real exponent `power >= 0`.
pub fn caputo_power(power: f64, alpha: f64, x: f64) -> Result<f64> {
    check_order(alpha)?;
    ensure(power >= 0.0, "exponent must be non-negative")?;
    ensure(x >= 0.0, "Caputo derivative is taken for x >= 0")?;
    if power == 0.0 {
        return Ok(0.0);
    }
    Ok(power_rule(power, alpha, x))
}

fn power_rule(power: f64, alpha: f64, x: f64) -> f64 {
    libm::tgamma(power + 1.0) / libm::tgamma(power + 1.0 - alpha) * libm::pow(x, power - alpha)
}

/// `b_j = (j + 1)^(1 - alpha) - j^(1 - alpha)` for `j = 0..=n`.
fn l1_coefficients(alpha: f64, n: usize) -> Vec<f64> {
    let e = 1.0 - alpha;
    (0..=n)
        .map(|j| {
            let j = j as f64;
            libm::pow(j + 1.0, e) - libm::pow(j, e)
        })
        .collect()
}

/// L1 discretization of the Caputo derivative at the right end of `[0, t_max]`.
///
/// With `N` intervals of width `dt` and `mu = 1 / (dt^alpha Gamma(2 - alpha))`,
/// the derivative at `t_N` is
/// `mu * sum_{k=0}^{N-1} b_k (u_{N-k} - u_{N-k-1})`, which expands to
/// `mu (u_N - (1 - b_1) u_{N-1} - sum_{j=1}^{N-2} (b_j - b_{j+1}) u_{N-1-j} - b_{N-1} u_0)`.
/// The truncation remainder is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Scheme {
    alpha: f64,
    grid_size: usize,
    t_max: f64,
    dt: f64,
    mu: f64,
    b: Vec<f64>,
    // weight of u(t_j) without the factor mu; depends on alpha and N only
    unit_weights: Vec<f64>,
}

impl L1Scheme {
    pub fn new(alpha: f64, grid_size: usize, t_max: f64) -> Result<Self> {
        ensure(
            alpha > 0.0 && alpha < 1.0,
            "L1 scheme needs a fractional order in (0, 1)",
        )?;
        ensure(grid_size >= 1, "L1 grid needs at least one interval")?;
        let b = l1_coefficients(alpha, grid_size);
        let n = grid_size;
        let mut unit_weights = alloc::vec![0.0; n + 1];
        for (k, &bk) in b.iter().take(n).enumerate() {
            unit_weights[n - k] += bk;
            unit_weights[n - k - 1] -= bk;
        }
        let mut scheme = Self {
            alpha,
            grid_size,
            t_max: 0.0,
            dt: 0.0,
            mu: 0.0,
            b,
            unit_weights,
        };
        scheme.set_endpoint(t_max)?;
        Ok(scheme)
    }

    /// Same order and grid size, new right endpoint. Reuses the coefficients.
    pub fn with_endpoint(&self, t_max: f64) -> Result<Self> {
        let mut scheme = self.clone();
        scheme.set_endpoint(t_max)?;
        Ok(scheme)
    }

    fn set_endpoint(&mut self, t_max: f64) -> Result<()> {
        ensure(
            t_max > 0.0 && t_max.is_finite(),
            "L1 endpoint must be positive and finite",
        )?;
        self.t_max = t_max;
        self.dt = t_max / self.grid_size as f64;
        self.mu = 1.0 / (libm::pow(self.dt, self.alpha) * libm::tgamma(2.0 - self.alpha));
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `b_0 ..= b_N`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Grid point `t_j = j dt`; `t_N` is exactly `t_max`.
    pub fn grid_point(&self, j: usize) -> f64 {
        if j == self.grid_size {
            self.t_max
        } else {
            j as f64 * self.dt
        }
    }

    /// `(t_j, weight_j)` pairs such that the derivative is `sum weight_j u(t_j)`.
    pub fn stencil(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.unit_weights
            .iter()
            .enumerate()
            .map(move |(j, &w)| (self.grid_point(j), self.mu * w))
    }

    /// Approximates the Caputo derivative of `u` at `t_max`.
    pub fn apply<F>(&self, mut u: F) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        let mut acc = 0.0;
        for (j, &w) in self.unit_weights.iter().enumerate() {
            acc += w * finite(u(self.grid_point(j)), "L1 evaluator")?;
        }
        finite(self.mu * acc, "L1 evaluator")
    }
}
