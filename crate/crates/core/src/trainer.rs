//! Composite squared-error loss and the training loop.
//!
//! Each epoch draws a batch of interior collocation points plus the samples
//! needed for the initial and boundary conditions, assembles
//! `SE = w_r SE_res + w_i SE_init + w_b SE_bnd`, differentiates it exactly
//! and takes one Adam step.

use alloc::vec::Vec;

use rand::distributions::Open01;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, TapeBuffers};
use crate::error::{ensure, finite, Error, Result};
use crate::field::{Field, NetworkField, Point, Scalar};
use crate::network::{Gradient, Network, DEFAULT_HIDDEN};
use crate::optim::Adam;
use crate::problems::{Constraint, Operators, Problem, ProblemId};
use crate::quadrature::RuleCache;

/// Relative weights of the residual, initial and boundary terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub residual: f64,
    pub initial: f64,
    pub boundary: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            residual: 1.0,
            initial: 1.0,
            boundary: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Intervals of the L1 grid.
    pub l1_points: usize,
    /// Gauss-Legendre nodes for integral terms.
    pub quad_order: usize,
    /// Collocation points per epoch.
    pub batch: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub loss_weights: LossWeights,
    pub hidden: Vec<usize>,
}

impl TrainConfig {
    /// Defaults per problem: 1000 epochs everywhere, L1 grids of 1000
    /// intervals for the ODE-type problems and 100 for the PDE, 400
    /// quadrature nodes. The integro and PDE problems use a learning rate of
    /// 3e-3, the ODE 1e-3.
    pub fn defaults_for(id: ProblemId) -> Self {
        Self {
            epochs: 1000,
            l1_points: match id {
                ProblemId::FracPde => 100,
                _ => 1000,
            },
            quad_order: 400,
            batch: 32,
            learning_rate: match id {
                ProblemId::FracOde => 1e-3,
                _ => 3e-3,
            },
            seed: 0,
            loss_weights: LossWeights::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.l1_points >= 1, "l1_points must be positive")?;
        ensure(self.quad_order >= 1, "quad_order must be positive")?;
        ensure(self.batch >= 1, "batch must be positive")?;
        ensure(
            self.learning_rate > 0.0 && self.learning_rate < 1.0,
            "learning rate must lie in (0, 1)",
        )?;
        let w = self.loss_weights;
        ensure(
            [w.residual, w.initial, w.boundary]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0),
            "loss weights must be finite and non-negative",
        )?;
        ensure(
            self.hidden.iter().all(|&h| h > 0),
            "hidden widths must be positive",
        )
    }

    pub fn layer_sizes(&self, problem: &Problem) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(problem.dim());
        sizes.extend_from_slice(&self.hidden);
        sizes.push(1);
        sizes
    }
}

/// Loss components of one evaluation. `total` is the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossRecord {
    pub residual: f64,
    pub initial: f64,
    pub boundary: f64,
    pub total: f64,
}

impl LossRecord {
    pub fn weighted_sum(&self, w: &LossWeights) -> f64 {
        w.residual * self.residual + w.initial * self.initial + w.boundary * self.boundary
    }
}

/// Samples for one loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub collocation: Vec<Point>,
    pub initial: Vec<Constraint>,
    /// `(left, right)` pairs, one per sampled boundary time.
    pub boundary: Vec<Constraint>,
}

/// Uniform point in the open domain interior.
pub fn sample_collocation<R: Rng + ?Sized>(problem: &Problem, rng: &mut R) -> Point {
    let x: f64 = rng.sample(Open01);
    match problem.id() {
        ProblemId::FracPde => Point::xt(x, rng.sample(Open01)),
        _ => Point::x(x),
    }
}

pub fn sample_batch<R: Rng + ?Sized>(problem: &Problem, size: usize, rng: &mut R) -> Batch {
    let collocation = (0..size)
        .map(|_| sample_collocation(problem, rng))
        .collect();
    let (initial, boundary) = if problem.dim() == 2 {
        let xs: Vec<f64> = (0..size).map(|_| rng.sample(Open01)).collect();
        let ts: Vec<f64> = (0..size).map(|_| rng.sample(Open01)).collect();
        (
            problem.initial_constraints(&xs),
            problem.boundary_constraints(&ts),
        )
    } else {
        (problem.initial_constraints(&[]), Vec::new())
    };
    Batch {
        collocation,
        initial,
        boundary,
    }
}

fn mean_square<F: Field>(field: &F, terms: &[F::Value], denominator: usize) -> F::Value {
    if terms.is_empty() {
        return field.constant(0.0);
    }
    let w = 1.0 / denominator as f64;
    let squares: Vec<(F::Value, f64)> = terms.iter().map(|&r| (r.square(), w)).collect();
    field.combine(&squares)
}

/// Builds the weighted loss over `batch` for any field.
///
/// `SE_res` and `SE_init` are means of squared mismatches; `SE_bnd` averages
/// `left^2 + right^2` over the sampled boundary times.
pub fn assemble_loss<F: Field>(
    field: &F,
    problem: &Problem,
    ops: &Operators,
    weights: &LossWeights,
    batch: &Batch,
) -> Result<(F::Value, LossRecord)> {
    ensure(!batch.collocation.is_empty(), "batch must not be empty")?;
    let residuals = batch
        .collocation
        .iter()
        .map(|&p| problem.residual(field, p, ops))
        .collect::<Result<Vec<_>>>()?;
    let residual = mean_square(field, &residuals, residuals.len());

    let mismatches = |constraints: &[Constraint]| -> Result<Vec<F::Value>> {
        constraints
            .iter()
            .map(|c| Ok(field.value(c.point)? - c.target))
            .collect()
    };
    let init = mismatches(&batch.initial)?;
    let initial = mean_square(field, &init, init.len().max(1));
    let bnd = mismatches(&batch.boundary)?;
    let boundary = mean_square(field, &bnd, (bnd.len() / 2).max(1));

    let record = LossRecord {
        residual: finite(residual.value(), "residual")?,
        initial: finite(initial.value(), "initial")?,
        boundary: finite(boundary.value(), "boundary")?,
        total: 0.0,
    };
    let total = field.combine(&[
        (residual, weights.residual),
        (initial, weights.initial),
        (boundary, weights.boundary),
    ]);
    let record = LossRecord {
        total: finite(total.value(), "total")?,
        ..record
    };
    Ok((total, record))
}

/// Loss components for a network, without gradients.
pub fn compute_loss(
    net: &Network,
    problem: &Problem,
    ops: &Operators,
    weights: &LossWeights,
    batch: &Batch,
) -> Result<LossRecord> {
    assemble_loss(&NetworkField(net), problem, ops, weights, batch).map(|(_, r)| r)
}

/// Loss components and the exact parameter gradient of the weighted total.
pub fn loss_and_gradient(
    net: &Network,
    problem: &Problem,
    ops: &Operators,
    weights: &LossWeights,
    batch: &Batch,
) -> Result<(LossRecord, Gradient)> {
    loss_and_gradient_with(net, problem, ops, weights, batch, &mut TapeBuffers::new())
}

fn loss_and_gradient_with(
    net: &Network,
    problem: &Problem,
    ops: &Operators,
    weights: &LossWeights,
    batch: &Batch,
    buffers: &mut TapeBuffers,
) -> Result<(LossRecord, Gradient)> {
    let tape = Tape::with_buffers(net, core::mem::take(buffers));
    let result = assemble_loss(&&tape, problem, ops, weights, batch)
        .map(|(total, record)| (record, tape.gradient(total)));
    *buffers = tape.into_buffers();
    let (record, grad) = result?;
    if !grad.is_finite() {
        return Err(Error::NonFinite {
            component: "gradient",
        });
    }
    Ok((record, grad))
}

/// Network, optimizer moments and loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub network: Network,
    pub optimizer: Adam,
    pub epoch: usize,
    pub history: Vec<LossRecord>,
}

/// Stepwise driver behind [`train`].
#[derive(Debug)]
pub struct Trainer {
    problem: Problem,
    config: TrainConfig,
    ops: Operators,
    rng: ChaCha8Rng,
    state: TrainState,
    buffers: TapeBuffers,
}

impl Trainer {
    pub fn new(problem: Problem, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let network = Network::init(&config.layer_sizes(&problem), config.seed)?;
        let ops = Operators::new(
            &problem,
            config.l1_points,
            config.quad_order,
            &mut RuleCache::new(),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        // keep sampling independent of the initialization stream
        rng.set_stream(1);
        let optimizer = Adam::new(network.parameter_count(), config.learning_rate);
        Ok(Self {
            problem,
            config,
            ops,
            rng,
            state: TrainState {
                network,
                optimizer,
                epoch: 0,
                history: Vec::new(),
            },
            buffers: TapeBuffers::new(),
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    /// One epoch: sample, differentiate, update. Returns the pre-update loss.
    pub fn step(&mut self) -> Result<LossRecord> {
        let epoch = self.state.epoch;
        let diverged = |e: Error| match e {
            Error::NonFinite { component } => Error::Diverged { epoch, component },
            other => other,
        };
        let batch = sample_batch(&self.problem, self.config.batch, &mut self.rng);
        let (record, grad) = loss_and_gradient_with(
            &self.state.network,
            &self.problem,
            &self.ops,
            &self.config.loss_weights,
            &batch,
            &mut self.buffers,
        )
        .map_err(diverged)?;
        let state = &mut self.state;
        state
            .optimizer
            .step(state.network.parameters_mut(), grad.as_slice());
        if !state.network.parameters().iter().all(|p| p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                component: "parameters",
            });
        }
        state.epoch += 1;
        state.history.push(record);
        Ok(record)
    }

    pub fn run(&mut self) -> Result<()> {
        while self.state.epoch < self.config.epochs {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_state(self) -> TrainState {
        self.state
    }
}

/// Trains a fresh network for `config.epochs` epochs.
pub fn train(problem: &Problem, config: &TrainConfig) -> Result<TrainState> {
    let mut trainer = Trainer::new(problem.clone(), config.clone())?;
    trainer.run()?;
    Ok(trainer.into_state())
}

/// Times at which the PDE error table is reported.
pub const TABLE_TIMES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// `x = 0, 0.1, .., 1`.
pub fn table_xs() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Evaluation grid of the error tables: the `x` grid, crossed with
/// [`TABLE_TIMES`] for the PDE (x-major order).
pub fn table_grid(problem: &Problem) -> Vec<Point> {
    let xs = table_xs();
    match problem.id() {
        ProblemId::FracPde => xs
            .iter()
            .flat_map(|&x| TABLE_TIMES.iter().map(move |&t| Point::xt(x, t)))
            .collect(),
        _ => xs.into_iter().map(Point::x).collect(),
    }
}

/// `|psi_pred - psi_exact|` at each grid point.
pub fn evaluate_mae<F: Field<Value = f64>>(
    predictor: &F,
    problem: &Problem,
    grid: &[Point],
) -> Result<Vec<(Point, f64)>> {
    grid.iter()
        .map(|&p| {
            let pred = predictor.value(p)?;
            Ok((p, libm::fabs(pred - problem.exact(p))))
        })
        .collect()
}

/// Mean of the absolute errors returned by [`evaluate_mae`].
pub fn mean_abs_error(errors: &[(Point, f64)]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().map(|(_, e)| e).sum::<f64>() / errors.len() as f64
}
