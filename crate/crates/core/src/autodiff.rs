//! Reverse-mode automatic differentiation for scalar losses over a network.
//!
//! A [`Tape`] records scalar arithmetic as a graph of [`Var`]s. Network queries
//! (`psi`, and `psi_x`, `psi_xx` along one input) enter the graph as leaves.
//! After the scalar sweep, the adjoint reaching each query leaf becomes the
//! seed of a parameter-space reverse pass through the network's jets.

use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{ensure, finite, Result};
use crate::field::{flatten, Derivs, Field, Point, Scalar};
use crate::network::{BatchActivations, Gradient, Network, Workspace};

#[derive(Debug, Clone, Copy)]
struct Query {
    input_start: usize,
    wrt: usize,
    order: u8,
    outputs: [usize; 3],
}

#[derive(Debug)]
struct BatchQuery {
    first_output: usize,
    acts: BatchActivations,
}

#[derive(Debug, Default)]
struct Graph {
    batches: Vec<BatchQuery>,
    spare: Vec<BatchActivations>,
    values: Vec<f64>,
    // node i owns edges[edge_start[i]..edge_start[i + 1]]
    edge_start: Vec<usize>,
    edges: Vec<(usize, f64)>,
    queries: Vec<Query>,
    query_inputs: Vec<f64>,
}

impl Graph {
    fn push(&mut self, value: f64, parents: &[(usize, f64)]) -> usize {
        if self.edge_start.is_empty() {
            self.edge_start.push(0);
        }
        self.edges.extend_from_slice(parents);
        self.edge_start.push(self.edges.len());
        self.values.push(value);
        self.values.len() - 1
    }
}

/// Storage of a finished tape, reusable by the next one.
#[derive(Debug, Default)]
pub struct TapeBuffers {
    graph: Graph,
}

impl TapeBuffers {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Records a scalar computation over a fixed network.
pub struct Tape<'n> {
    net: &'n Network,
    graph: RefCell<Graph>,
}

/// A scalar on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    graph: &'t RefCell<Graph>,
    index: usize,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("index", &self.index)
            .field("value", &self.value)
            .finish()
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    fn unary(self, value: f64, partial: f64) -> Var<'t> {
        let index = self
            .graph
            .borrow_mut()
            .push(value, &[(self.index, partial)]);
        Var {
            graph: self.graph,
            index,
            value,
        }
    }

    fn binary(self, rhs: Var<'t>, value: f64, da: f64, db: f64) -> Var<'t> {
        let index = self
            .graph
            .borrow_mut()
            .push(value, &[(self.index, da), (rhs.index, db)]);
        Var {
            graph: self.graph,
            index,
            value,
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Var<'t> {
        self.unary(self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Var<'t> {
        self.unary(self.value - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Var<'t> {
        self.unary(self.value * rhs, rhs)
    }
}

impl Scalar for Var<'_> {
    fn value(&self) -> f64 {
        self.value
    }

    fn square(self) -> Self {
        self.unary(self.value * self.value, 2.0 * self.value)
    }
}

impl<'n> Tape<'n> {
    pub fn new(net: &'n Network) -> Self {
        Self::with_buffers(net, TapeBuffers::new())
    }

    pub fn with_buffers(net: &'n Network, buffers: TapeBuffers) -> Self {
        Self {
            net,
            graph: RefCell::new(buffers.graph),
        }
    }

    /// Clears the tape, keeping its allocations.
    pub fn into_buffers(self) -> TapeBuffers {
        let mut graph = self.graph.into_inner();
        graph.values.clear();
        graph.edge_start.clear();
        graph.edges.clear();
        graph.queries.clear();
        graph.query_inputs.clear();
        let Graph { batches, spare, .. } = &mut graph;
        spare.extend(batches.drain(..).map(|b| b.acts));
        TapeBuffers { graph }
    }

    pub fn network(&self) -> &'n Network {
        self.net
    }

    pub fn len(&self) -> usize {
        self.graph.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        let index = self.graph.borrow_mut().push(value, &[]);
        Var {
            graph: &self.graph,
            index,
            value,
        }
    }

    /// `sum_i weight_i * var_i` as a single node.
    pub fn linear_combination<'t>(&'t self, terms: &[(Var<'t>, f64)]) -> Var<'t> {
        let value = terms.iter().map(|(v, w)| v.value * w).sum();
        let mut graph = self.graph.borrow_mut();
        if graph.edge_start.is_empty() {
            graph.edge_start.push(0);
        }
        graph.edges.extend(terms.iter().map(|(v, w)| (v.index, *w)));
        let end = graph.edges.len();
        graph.edge_start.push(end);
        graph.values.push(value);
        Var {
            graph: &self.graph,
            index: graph.values.len() - 1,
            value,
        }
    }

    fn query(&self, point: &[f64], wrt: usize, order: u8) -> Result<[Var<'_>; 3]> {
        ensure(
            point.len() == self.net.input_width(),
            "input length does not match network input width",
        )?;
        let (value, d1, d2) = if order == 0 {
            (self.net.eval(point)?, 0.0, 0.0)
        } else {
            let d = self.net.eval_with_input_derivs(point, wrt, order)?;
            (d.value, d.d1, d.d2.unwrap_or(0.0))
        };
        let mut graph = self.graph.borrow_mut();
        let input_start = graph.query_inputs.len();
        graph.query_inputs.extend_from_slice(point);
        // Components above `order` get no node of their own; they alias the
        // value node and are never handed out.
        let vals = [value, d1, d2];
        let first = graph.push(value, &[]);
        let mut outputs = [first; 3];
        for k in 1..=usize::from(order) {
            outputs[k] = graph.push(vals[k], &[]);
        }
        graph.queries.push(Query {
            input_start,
            wrt,
            order,
            outputs,
        });
        let var = |k: usize| Var {
            graph: &self.graph,
            index: outputs[k],
            value: vals[k],
        };
        Ok([var(0), var(1), var(2)])
    }

    /// `psi` at many points as leaves, sharing one batched forward pass.
    pub fn psi_batch(&self, points: &[Point]) -> Result<Vec<Var<'_>>> {
        let coords = flatten(points)?;
        if let Some(p) = points.first() {
            ensure(
                p.dim() == self.net.input_width(),
                "input length does not match network input width",
            )?;
        }
        let mut acts = self.graph.borrow_mut().spare.pop().unwrap_or_default();
        self.net.forward_batch(&coords, &mut acts)?;
        let mut graph = self.graph.borrow_mut();
        let first_output = graph.values.len();
        let vars = acts
            .outputs()
            .iter()
            .map(|&value| Var {
                graph: &self.graph,
                index: graph.push(value, &[]),
                value,
            })
            .collect();
        graph.batches.push(BatchQuery { first_output, acts });
        Ok(vars)
    }

    /// `psi(point)` as a leaf.
    pub fn psi(&self, point: &[f64]) -> Result<Var<'_>> {
        Ok(self.query(point, 0, 0)?[0])
    }

    /// `psi`, `psi_x` and optionally `psi_xx` along input `wrt`.
    pub fn psi_derivs(&self, point: &[f64], wrt: usize, order: u8) -> Result<Derivs<Var<'_>>> {
        ensure(order == 1 || order == 2, "derivative order must be 1 or 2")?;
        ensure(
            wrt < self.net.input_width(),
            "derivative index out of range",
        )?;
        let [value, d1, d2] = self.query(point, wrt, order)?;
        Ok(Derivs {
            value,
            d1,
            d2: (order == 2).then_some(d2),
        })
    }

    /// Gradient of `output` with respect to every network parameter.
    pub fn gradient(&self, output: Var<'_>) -> Gradient {
        let mut graph = self.graph.borrow_mut();
        let mut adjoint = alloc::vec![0.0; graph.values.len()];
        adjoint[output.index] = 1.0;
        for i in (0..=output.index).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            for &(parent, partial) in &graph.edges[graph.edge_start[i]..graph.edge_start[i + 1]] {
                adjoint[parent] += a * partial;
            }
        }
        let mut grad = Gradient::zeros_like(self.net);
        let mut ws = Workspace::new();
        let width = self.net.input_width();
        for q in &graph.queries {
            let mut seeds = [0.0; 3];
            for k in 0..=usize::from(q.order) {
                seeds[k] = adjoint[q.outputs[k]];
            }
            if seeds.iter().all(|&s| s == 0.0) {
                continue;
            }
            let inputs = &graph.query_inputs[q.input_start..q.input_start + width];
            self.net.accumulate_gradient(
                inputs,
                q.wrt,
                q.order,
                seeds,
                grad.as_mut_slice(),
                &mut ws,
            );
        }
        for batch in &mut graph.batches {
            let n = batch.acts.len();
            let seeds = &adjoint[batch.first_output..batch.first_output + n];
            if seeds.iter().all(|&s| s == 0.0) {
                continue;
            }
            self.net
                .backward_batch(&mut batch.acts, seeds, grad.as_mut_slice());
        }
        grad
    }
}

impl<'t> Field for &'t Tape<'_> {
    type Value = Var<'t>;

    fn value(&self, point: Point) -> Result<Var<'t>> {
        self.psi(point.coords())
    }

    fn values(&self, points: &[Point]) -> Result<Vec<Var<'t>>> {
        self.psi_batch(points)
    }

    fn derivs(&self, point: Point, wrt: usize, order: u8) -> Result<Derivs<Var<'t>>> {
        self.psi_derivs(point.coords(), wrt, order)
    }

    fn constant(&self, c: f64) -> Var<'t> {
        Tape::constant(self, c)
    }

    fn combine(&self, terms: &[(Var<'t>, f64)]) -> Var<'t> {
        self.linear_combination(terms)
    }
}

/// Evaluates a scalar loss built on a tape and returns it with its exact
/// parameter gradient.
pub fn loss_gradient<F>(net: &Network, build: F) -> Result<(f64, Gradient)>
where
    F: for<'t> FnOnce(&'t Tape<'_>) -> Result<Var<'t>>,
{
    let tape = Tape::new(net);
    let loss = build(&tape)?;
    let value = finite(loss.value(), "loss")?;
    Ok((value, tape.gradient(loss)))
}
