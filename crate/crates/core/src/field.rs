//! Abstraction over "the function being tested" inside a residual.
//!
//! The same residual code runs against a network in plain `f64`, a network on
//! the reverse-mode [`Tape`](crate::autodiff::Tape), or an analytic solution.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::network::{BatchActivations, Network};

/// Arithmetic needed to assemble residuals and losses.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn value(&self) -> f64;

    fn square(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
}

/// A point in the problem domain: `x`, or `(x, t)` for the PDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: usize,
}

impl Point {
    pub fn x(x: f64) -> Self {
        Self {
            coords: [x, 0.0],
            dim: 1,
        }
    }

    pub fn xt(x: f64, t: f64) -> Self {
        Self {
            coords: [x, t],
            dim: 2,
        }
    }

    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match *coords {
            [x] => Ok(Self::x(x)),
            [x, t] => Ok(Self::xt(x, t)),
            _ => Err(Error::InvalidArgument("points have one or two coordinates")),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x_coord(&self) -> f64 {
        self.coords[0]
    }

    pub fn t_coord(&self) -> Option<f64> {
        (self.dim == 2).then_some(self.coords[1])
    }

    pub(crate) fn with_axis(mut self, axis: usize, value: f64) -> Self {
        self.coords[axis] = value;
        self
    }
}

/// Value and derivatives along one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs<S> {
    pub value: S,
    pub d1: S,
    pub d2: Option<S>,
}

/// A scalar field `psi(point)` with derivative queries.
pub trait Field {
    type Value: Scalar;

    fn value(&self, point: Point) -> Result<Self::Value>;

    /// Values at many points; fields backed by a network batch the forward pass.
    fn values(&self, points: &[Point]) -> Result<Vec<Self::Value>> {
        points.iter().map(|&p| self.value(p)).collect()
    }

    /// `order` is 1 or 2.
    fn derivs(&self, point: Point, wrt: usize, order: u8) -> Result<Derivs<Self::Value>>;

    fn constant(&self, c: f64) -> Self::Value;

    /// `sum_i weight_i * value_i`.
    fn combine(&self, terms: &[(Self::Value, f64)]) -> Self::Value {
        terms
            .iter()
            .fold(self.constant(0.0), |acc, &(v, w)| acc + v * w)
    }
}

/// A network evaluated in plain floating point.
#[derive(Debug, Clone, Copy)]
pub struct NetworkField<'a>(pub &'a Network);

impl Field for NetworkField<'_> {
    type Value = f64;

    fn value(&self, point: Point) -> Result<f64> {
        self.0.eval(point.coords())
    }

    fn values(&self, points: &[Point]) -> Result<Vec<f64>> {
        let mut acts = BatchActivations::new();
        self.0.forward_batch(&flatten(points)?, &mut acts)?;
        Ok(acts.outputs().to_vec())
    }

    fn derivs(&self, point: Point, wrt: usize, order: u8) -> Result<Derivs<f64>> {
        let d = self.0.eval_with_input_derivs(point.coords(), wrt, order)?;
        Ok(Derivs {
            value: d.value,
            d1: d.d1,
            d2: d.d2,
        })
    }

    fn constant(&self, c: f64) -> f64 {
        c
    }

    fn combine(&self, terms: &[(f64, f64)]) -> f64 {
        terms.iter().map(|(v, w)| v * w).sum()
    }
}

/// Row-major coordinates of points that share one dimension.
pub(crate) fn flatten(points: &[Point]) -> Result<Vec<f64>> {
    let dim = points.first().map_or(1, Point::dim);
    if points.iter().any(|p| p.dim() != dim) {
        return Err(Error::InvalidArgument(
            "points in a batch must share a dimension",
        ));
    }
    Ok(points
        .iter()
        .flat_map(|p| p.coords().iter().copied())
        .collect())
}
