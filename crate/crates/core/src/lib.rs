//! Physics-informed neural network solver for fractional differential
//! equations.
//!
//! Caputo derivatives are discretized with the L1 scheme, integral terms with
//! Gauss-Legendre quadrature, and a small tanh network is trained on the
//! squared residual plus initial and boundary mismatches. The crate is
//! `no_std` and needs only `alloc`; file formats and the command line live in
//! the `fracpinn` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod error;
pub mod field;
pub mod fractional;
pub mod network;
pub mod optim;
pub mod problems;
pub mod quadrature;
pub mod selfcheck;
pub mod trainer;

pub use autodiff::{loss_gradient, Tape, TapeBuffers, Var};
pub use error::{Error, Result};
pub use field::{Derivs, Field, NetworkField, Point, Scalar};
pub use fractional::{caputo_polynomial, caputo_power, L1Scheme};
pub use network::{BatchActivations, Gradient, InputDerivs, Jet, Network, Workspace};
pub use optim::Adam;
pub use problems::{Constraint, ExactField, IntegroForcing, Operators, Problem, ProblemId};
pub use quadrature::{QuadratureRule, RuleCache};
pub use trainer::{
    evaluate_mae, sample_batch, sample_collocation, train, Batch, LossRecord, LossWeights,
    TrainConfig, TrainState, Trainer,
};
