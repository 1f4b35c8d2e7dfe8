//! The three benchmark problems: a nonlinear fractional ODE, a fractional
//! integro-differential equation and a time-fractional PDE.
//!
//! Each problem knows its exact solution, its initial and boundary data, and
//! how to assemble the pointwise residual against any [`Field`], using the L1
//! operator for the Caputo term and Gauss-Legendre quadrature for integrals.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{pow, tgamma};

use crate::error::{ensure, Error, Result};
use crate::field::{Derivs, Field, Point, Scalar};
use crate::fractional::L1Scheme;
use crate::quadrature::{QuadratureRule, RuleCache};

/// Problem identifiers as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    /// `D^nu psi + psi^2 = x + (x^(nu+1) / Gamma(nu+2))^2`
    FracOde,
    /// `D^0.5 psi = psi + c x^1.5 - x^2 - x^3/3 + int_0^x psi`
    FracIntegro,
    /// `D_t^alpha psi + x psi_x + psi_xx = 2 t^alpha + 2 x^2 + 2`
    FracPde,
}

impl ProblemId {
    pub const ALL: [ProblemId; 3] = [Self::FracOde, Self::FracIntegro, Self::FracPde];

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::FracOde => "ex1",
            Self::FracIntegro => "ex2",
            Self::FracPde => "ex3",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::FracPde => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" | "frac_ode" => Ok(Self::FracOde),
            "ex2" | "frac_integro" => Ok(Self::FracIntegro),
            "ex3" | "frac_pde" => Ok(Self::FracPde),
            _ => Err(Error::InvalidArgument(
                "unknown problem id (expected ex1, ex2 or ex3)",
            )),
        }
    }
}

/// Forcing coefficient of the `x^1.5` term in the integro-differential problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegroForcing {
    /// `Gamma(3) / Gamma(2.5) = 8 / (3 sqrt(pi))`, for which `psi = x^2` solves the equation.
    #[default]
    Consistent,
    /// `8 / sin(0.5)`. `psi = x^2` does not solve the equation with this value.
    AsPrinted,
}

impl IntegroForcing {
    pub fn coefficient(self) -> f64 {
        match self {
            Self::Consistent => tgamma(3.0) / tgamma(2.5),
            Self::AsPrinted => 8.0 / libm::sin(0.5),
        }
    }
}

/// A pointwise condition `psi(point) = target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub point: Point,
    pub target: f64,
}

/// Discrete operators used inside residuals.
#[derive(Debug, Clone)]
pub struct Operators {
    // None when the order is 1 and the derivative is taken exactly
    l1: Option<L1Scheme>,
    quad: Option<Arc<QuadratureRule>>,
}

impl Operators {
    /// `l1_points` intervals for the Caputo term; `quad_order` nodes for the
    /// integral term (only built for problems that have one).
    pub fn new(
        problem: &Problem,
        l1_points: usize,
        quad_order: usize,
        cache: &mut RuleCache,
    ) -> Result<Self> {
        let l1 = if problem.alpha < 1.0 {
            Some(L1Scheme::new(problem.alpha, l1_points, 1.0)?)
        } else {
            None
        };
        let quad = match problem.id {
            ProblemId::FracIntegro => Some(cache.get(quad_order)?),
            _ => None,
        };
        Ok(Self { l1, quad })
    }

    pub fn l1_points(&self) -> Option<usize> {
        self.l1.as_ref().map(L1Scheme::grid_size)
    }

    pub fn quad_order(&self) -> Option<usize> {
        self.quad.as_ref().map(|q| q.order())
    }

    /// Caputo derivative along `axis`, with the L1 grid spanning `[0, point[axis]]`.
    pub fn caputo<F: Field>(&self, field: &F, point: Point, axis: usize) -> Result<F::Value> {
        match &self.l1 {
            None => Ok(field.derivs(point, axis, 1)?.d1),
            Some(base) => {
                let scheme = base.with_endpoint(point.coords()[axis])?;
                let (points, weights): (Vec<Point>, Vec<f64>) = scheme
                    .stencil()
                    .map(|(t, w)| (point.with_axis(axis, t), w))
                    .unzip();
                let values = field.values(&points)?;
                let terms: Vec<_> = values.into_iter().zip(weights).collect();
                Ok(field.combine(&terms))
            }
        }
    }

    /// `int_0^{point[axis]} psi` along `axis` by Gauss-Legendre quadrature.
    pub fn integral<F: Field>(&self, field: &F, point: Point, axis: usize) -> Result<F::Value> {
        let rule = self
            .quad
            .as_ref()
            .ok_or(Error::InvalidArgument("problem has no integral operator"))?;
        let upper = point.coords()[axis];
        let (points, weights): (Vec<Point>, Vec<f64>) = rule
            .mapped(0.0, upper)?
            .into_iter()
            .map(|(s, w)| (point.with_axis(axis, s), w))
            .unzip();
        let values = field.values(&points)?;
        let terms: Vec<_> = values.into_iter().zip(weights).collect();
        Ok(field.combine(&terms))
    }
}

/// One benchmark problem at a given fractional order.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    id: ProblemId,
    alpha: f64,
    forcing: IntegroForcing,
}

impl Problem {
    /// Fractional ODE on `[0, 1]`, `0 < nu <= 1`.
    pub fn example1(nu: f64) -> Result<Self> {
        ensure(nu > 0.0 && nu <= 1.0, "example 1 needs 0 < nu <= 1")?;
        Ok(Self {
            id: ProblemId::FracOde,
            alpha: nu,
            forcing: IntegroForcing::default(),
        })
    }

    /// Integro-differential equation of order 0.5 with exact solution `x^2`.
    pub fn example2() -> Self {
        Self::example2_with(IntegroForcing::Consistent)
    }

    pub fn example2_with(forcing: IntegroForcing) -> Self {
        Self {
            id: ProblemId::FracIntegro,
            alpha: 0.5,
            forcing,
        }
    }

    /// Time-fractional PDE on `(0, 1)^2`, `0 < alpha < 1`.
    pub fn example3(alpha: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha < 1.0, "example 3 needs 0 < alpha < 1")?;
        Ok(Self {
            id: ProblemId::FracPde,
            alpha,
            forcing: IntegroForcing::default(),
        })
    }

    /// Builds a problem by id; `alpha` is ignored for the fixed-order problem.
    pub fn new(id: ProblemId, alpha: f64) -> Result<Self> {
        match id {
            ProblemId::FracOde => Self::example1(alpha),
            ProblemId::FracIntegro => Ok(Self::example2()),
            ProblemId::FracPde => Self::example3(alpha),
        }
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn forcing(&self) -> IntegroForcing {
        self.forcing
    }

    pub fn dim(&self) -> usize {
        self.id.dim()
    }

    /// Coordinate the Caputo derivative acts on.
    pub fn fractional_axis(&self) -> usize {
        match self.id {
            ProblemId::FracPde => 1,
            _ => 0,
        }
    }

    // 2 Gamma(alpha + 1) / Gamma(2 alpha + 1)
    fn pde_time_scale(&self) -> f64 {
        2.0 * tgamma(self.alpha + 1.0) / tgamma(2.0 * self.alpha + 1.0)
    }

    /// Boundary data of the PDE at `x = 0`: `2 Gamma(a+1)/Gamma(2a+1) t^(2a)`.
    fn pde_left(&self, t: f64) -> f64 {
        self.pde_time_scale() * pow(t, 2.0 * self.alpha)
    }

    pub fn exact(&self, point: Point) -> f64 {
        let x = point.x_coord();
        match self.id {
            ProblemId::FracOde => pow(x, self.alpha + 1.0) / tgamma(self.alpha + 2.0),
            ProblemId::FracIntegro => x * x,
            ProblemId::FracPde => x * x + self.pde_left(point.t_coord().unwrap_or(0.0)),
        }
    }

    /// Exact derivatives along `wrt` (order 1 or 2).
    pub fn exact_derivs(&self, point: Point, wrt: usize, order: u8) -> Result<Derivs<f64>> {
        ensure(order == 1 || order == 2, "derivative order must be 1 or 2")?;
        ensure(wrt < self.dim(), "derivative index out of range")?;
        let x = point.x_coord();
        let value = self.exact(point);
        let (d1, d2) = match (self.id, wrt) {
            (ProblemId::FracOde, _) => {
                let nu = self.alpha;
                let g = tgamma(nu + 2.0);
                (
                    (nu + 1.0) * pow(x, nu) / g,
                    (nu + 1.0) * nu * pow(x, nu - 1.0) / g,
                )
            }
            (ProblemId::FracIntegro, _) | (ProblemId::FracPde, 0) => (2.0 * x, 2.0),
            (ProblemId::FracPde, _) => {
                let a2 = 2.0 * self.alpha;
                let t = point.t_coord().unwrap_or(0.0);
                let s = self.pde_time_scale();
                (
                    s * a2 * pow(t, a2 - 1.0),
                    s * a2 * (a2 - 1.0) * pow(t, a2 - 2.0),
                )
            }
        };
        Ok(Derivs {
            value,
            d1,
            d2: (order == 2).then_some(d2),
        })
    }

    /// Right-hand side terms that do not involve `psi`.
    pub fn forcing_term(&self, point: Point) -> f64 {
        let x = point.x_coord();
        match self.id {
            ProblemId::FracOde => {
                let s = pow(x, self.alpha + 1.0) / tgamma(self.alpha + 2.0);
                x + s * s
            }
            ProblemId::FracIntegro => {
                self.forcing.coefficient() * pow(x, 1.5) - x * x - x * x * x / 3.0
            }
            ProblemId::FracPde => {
                let t = point.t_coord().unwrap_or(0.0);
                2.0 * pow(t, self.alpha) + 2.0 * x * x + 2.0
            }
        }
    }

    /// Pointwise equation residual of `field` at an interior point.
    pub fn residual<F: Field>(&self, field: &F, point: Point, ops: &Operators) -> Result<F::Value> {
        ensure(
            point.dim() == self.dim(),
            "point dimension does not match problem",
        )?;
        let axis = self.fractional_axis();
        ensure(
            point.coords()[axis] > 0.0,
            "residual needs a positive fractional coordinate",
        )?;
        let frac = ops.caputo(field, point, axis)?;
        let rhs = self.forcing_term(point);
        let r = match self.id {
            ProblemId::FracOde => {
                let psi = field.value(point)?;
                frac + psi.square() - rhs
            }
            ProblemId::FracIntegro => {
                let psi = field.value(point)?;
                let zeta = ops.integral(field, point, 0)?;
                frac - psi - zeta - rhs
            }
            ProblemId::FracPde => {
                let d = field.derivs(point, 0, 2)?;
                let psi_xx = d.d2.unwrap_or_else(|| field.constant(0.0));
                frac + d.d1 * point.x_coord() + psi_xx - rhs
            }
        };
        Ok(r)
    }

    /// Initial conditions. The ODE-type problems have the single condition
    /// `psi(0) = 0`; the PDE has `psi(x, 0) = x^2` at each sampled `x`.
    pub fn initial_constraints(&self, samples: &[f64]) -> Vec<Constraint> {
        match self.id {
            ProblemId::FracPde => samples
                .iter()
                .map(|&x| Constraint {
                    point: Point::xt(x, 0.0),
                    target: x * x,
                })
                .collect(),
            _ => alloc::vec![Constraint {
                point: Point::x(0.0),
                target: 0.0,
            }],
        }
    }

    /// Boundary conditions at `x = 0` and `x = 1` for each sampled time, in
    /// `(left, right)` pairs. Empty for the ODE-type problems.
    pub fn boundary_constraints(&self, samples: &[f64]) -> Vec<Constraint> {
        match self.id {
            ProblemId::FracPde => samples
                .iter()
                .flat_map(|&t| {
                    let left = self.pde_left(t);
                    [
                        Constraint {
                            point: Point::xt(0.0, t),
                            target: left,
                        },
                        Constraint {
                            point: Point::xt(1.0, t),
                            target: 1.0 + left,
                        },
                    ]
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn has_boundary(&self) -> bool {
        self.id == ProblemId::FracPde
    }
}

/// The exact solution of a problem viewed as a [`Field`].
#[derive(Debug, Clone, Copy)]
pub struct ExactField<'p>(pub &'p Problem);

impl Field for ExactField<'_> {
    type Value = f64;

    fn value(&self, point: Point) -> Result<f64> {
        Ok(self.0.exact(point))
    }

    fn derivs(&self, point: Point, wrt: usize, order: u8) -> Result<Derivs<f64>> {
        self.0.exact_derivs(point, wrt, order)
    }

    fn constant(&self, c: f64) -> f64 {
        c
    }

    fn combine(&self, terms: &[(f64, f64)]) -> f64 {
        terms.iter().map(|(v, w)| v * w).sum()
    }
}
