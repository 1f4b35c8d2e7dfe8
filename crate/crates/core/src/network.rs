//! Fully connected tanh network with a scalar output.
//!
//! Parameters live in one flat buffer, layer by layer: the weight matrix in
//! row-major `[fan_out][fan_in]` order followed by the bias vector. Hidden
//! layers apply `tanh`, the output layer is affine.
//!
//! Input derivatives are carried through the forward pass as second-order
//! jets along one input direction. [`Network::accumulate_gradient`] runs the
//! reverse pass through those jets, so a loss that contains `psi_x` or
//! `psi_xx` differentiates exactly with respect to the parameters.

use alloc::vec::Vec;
use core::ops::{Add, Mul};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};

/// Default hidden widths for the benchmark problems.
pub const DEFAULT_HIDDEN: [usize; 3] = [20, 20, 20];

/// Value plus first and second derivative along one input direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            d1: 0.0,
            d2: 0.0,
        }
    }

    pub fn variable(value: f64) -> Self {
        Self {
            value,
            d1: 1.0,
            d2: 0.0,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet {
            value: self.value + rhs.value,
            d1: self.d1 + rhs.d1,
            d2: self.d2 + rhs.d2,
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        Jet {
            value: self.value * rhs,
            d1: self.d1 * rhs,
            d2: self.d2 * rhs,
        }
    }
}

/// Scalars the forward pass is generic over.
pub trait Activation: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn from_f64(value: f64) -> Self;
    fn tanh(self) -> Self;
}

impl Activation for f64 {
    fn from_f64(value: f64) -> Self {
        value
    }
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
}

impl Activation for Jet {
    fn from_f64(value: f64) -> Self {
        Jet::constant(value)
    }
    fn tanh(self) -> Self {
        let h = libm::tanh(self.value);
        let h1 = 1.0 - h * h;
        let h2 = -2.0 * h * h1;
        Jet {
            value: h,
            d1: h1 * self.d1,
            d2: h2 * self.d1 * self.d1 + h1 * self.d2,
        }
    }
}

/// Output value and input derivatives along one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    fan_in: usize,
    fan_out: usize,
    weights: usize,
    bias: usize,
}

/// Multilayer perceptron `[input, hidden.., 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

fn layout(layer_sizes: &[usize]) -> Result<(Vec<LayerShape>, usize)> {
    ensure(
        layer_sizes.len() >= 2,
        "network needs input and output layers",
    )?;
    ensure(
        layer_sizes.iter().all(|&w| w > 0),
        "layer widths must be positive",
    )?;
    ensure(
        *layer_sizes.last().unwrap() == 1,
        "network output width must be 1",
    )?;
    let mut offset = 0;
    let layers = layer_sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let shape = LayerShape {
                fan_in,
                fan_out,
                weights: offset,
                bias: offset + fan_in * fan_out,
            };
            offset += fan_in * fan_out + fan_out;
            shape
        })
        .collect();
    Ok((layers, offset))
}

impl Network {
    /// Glorot-uniform weights and zero biases, deterministic in `seed`.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        let (layers, count) = layout(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = alloc::vec![0.0; count];
        for layer in &layers {
            let limit = libm::sqrt(6.0 / (layer.fan_in + layer.fan_out) as f64);
            let dist = Uniform::new_inclusive(-limit, limit);
            for w in &mut params[layer.weights..layer.bias] {
                *w = dist.sample(&mut rng);
            }
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            params,
        })
    }

    /// Rebuilds a network from a flat parameter buffer.
    pub fn from_parameters(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let (layers, count) = layout(layer_sizes)?;
        ensure(
            params.len() == count,
            "parameter count does not match layer sizes",
        )?;
        ensure(
            params.iter().all(|p| p.is_finite()),
            "parameters must be finite",
        )?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Forward pass over any [`Activation`] scalar.
    pub fn forward<S: Activation>(&self, inputs: &[S]) -> Result<S> {
        ensure(
            inputs.len() == self.input_width(),
            "input length does not match network input width",
        )?;
        let mut current: Vec<S> = inputs.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = &self.params[layer.weights..layer.bias];
            let b = &self.params[layer.bias..layer.bias + layer.fan_out];
            let next: Vec<S> = (0..layer.fan_out)
                .map(|i| {
                    let row = &w[i * layer.fan_in..(i + 1) * layer.fan_in];
                    let z = row
                        .iter()
                        .zip(&current)
                        .fold(S::from_f64(b[i]), |acc, (&wij, &a)| acc + a * wij);
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            current = next;
        }
        Ok(current[0])
    }

    pub fn eval(&self, inputs: &[f64]) -> Result<f64> {
        self.forward(inputs)
    }

    /// `psi`, `d psi / d x_wrt` and, for `max_order == 2`, the second derivative.
    pub fn eval_with_input_derivs(
        &self,
        inputs: &[f64],
        wrt: usize,
        max_order: u8,
    ) -> Result<InputDerivs> {
        ensure(
            max_order == 1 || max_order == 2,
            "derivative order must be 1 or 2",
        )?;
        ensure(wrt < self.input_width(), "derivative index out of range")?;
        let jets: Vec<Jet> = inputs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == wrt {
                    Jet::variable(x)
                } else {
                    Jet::constant(x)
                }
            })
            .collect();
        let out = self.forward(&jets)?;
        Ok(InputDerivs {
            value: out.value,
            d1: out.d1,
            d2: (max_order == 2).then_some(out.d2),
        })
    }

    /// Forward pass over `n` points given row-major in `points` (`n x input_width`).
    ///
    /// Activations are kept in `acts` for [`Network::backward_batch`].
    pub fn forward_batch(&self, points: &[f64], acts: &mut BatchActivations) -> Result<()> {
        let d = self.input_width();
        ensure(
            points.len().is_multiple_of(d),
            "point buffer length is not a multiple of the input width",
        )?;
        let n = points.len() / d;
        acts.resize(self, n);
        let inputs = &mut acts.layers[0];
        for (p, coords) in points.chunks_exact(d).enumerate() {
            for (j, &c) in coords.iter().enumerate() {
                inputs[j * n + p] = c;
            }
        }
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = &self.params[layer.weights..layer.bias];
            let b = &self.params[layer.bias..layer.bias + layer.fan_out];
            let (done, rest) = acts.layers.split_at_mut(l + 1);
            let input = &done[l];
            let out = if l == last {
                &mut acts.output
            } else {
                &mut rest[0]
            };
            for i in 0..layer.fan_out {
                let row = &mut out[i * n..(i + 1) * n];
                row.fill(b[i]);
                for j in 0..layer.fan_in {
                    axpy(w[i * layer.fan_in + j], &input[j * n..(j + 1) * n], row);
                }
                if l != last {
                    for v in row.iter_mut() {
                        *v = libm::tanh(*v);
                    }
                }
            }
        }
        Ok(())
    }

    /// Adds `sum_p seeds[p] dpsi(point_p)/dtheta` into `grad`, using the
    /// activations of the preceding [`Network::forward_batch`].
    ///
    /// Panics on shape mismatch.
    pub fn backward_batch(&self, acts: &mut BatchActivations, seeds: &[f64], grad: &mut [f64]) {
        let n = acts.n;
        assert_eq!(seeds.len(), n);
        assert_eq!(grad.len(), self.params.len());
        let BatchActivations {
            layers,
            adj,
            adj_prev,
            ..
        } = acts;
        adj[..n].copy_from_slice(seeds);
        for l in (0..self.layers.len()).rev() {
            let layer = self.layers[l];
            let input = &layers[l];
            let (gw, gb) = grad[layer.weights..layer.bias + layer.fan_out]
                .split_at_mut(layer.bias - layer.weights);
            for i in 0..layer.fan_out {
                let z = &adj[i * n..(i + 1) * n];
                gb[i] += z.iter().sum::<f64>();
                for j in 0..layer.fan_in {
                    gw[i * layer.fan_in + j] += dot(z, &input[j * n..(j + 1) * n]);
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[layer.weights..layer.bias];
            for j in 0..layer.fan_in {
                let a = &mut adj_prev[j * n..(j + 1) * n];
                a.fill(0.0);
                for i in 0..layer.fan_out {
                    axpy(w[i * layer.fan_in + j], &adj[i * n..(i + 1) * n], a);
                }
                // through tanh: h' = 1 - h^2
                for (av, &h) in a.iter_mut().zip(&input[j * n..(j + 1) * n]) {
                    *av *= 1.0 - h * h;
                }
            }
            core::mem::swap(adj, adj_prev);
        }
    }

    /// Adds `seeds[0] dpsi/dtheta + seeds[1] dpsi_x/dtheta + seeds[2] dpsi_xx/dtheta`
    /// into `grad`, where derivatives in `x` are along input `wrt`.
    ///
    /// Only the first `order + 1` seeds are read. Panics on shape mismatch.
    pub fn accumulate_gradient(
        &self,
        inputs: &[f64],
        wrt: usize,
        order: u8,
        seeds: [f64; 3],
        grad: &mut [f64],
        ws: &mut Workspace,
    ) {
        assert_eq!(inputs.len(), self.input_width());
        assert_eq!(grad.len(), self.params.len());
        assert!(order <= 2);
        ws.prepare(self);
        self.forward_tape(inputs, wrt, order, ws);
        self.reverse(order, seeds, grad, ws);
    }

    /// Fills the workspace with per-layer jets: pre-activations `z*` for every
    /// layer and activations `a*` for the input and hidden layers.
    fn forward_tape(&self, inputs: &[f64], wrt: usize, order: u8, ws: &mut Workspace) {
        let order = usize::from(order);
        ws.a[0][0].copy_from_slice(inputs);
        if order >= 1 {
            ws.a[0][1].fill(0.0);
            ws.a[0][1][wrt] = 1.0;
            ws.a[0][2].fill(0.0);
        }
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = &self.params[layer.weights..layer.bias];
            let b = &self.params[layer.bias..layer.bias + layer.fan_out];
            let (prev, rest) = ws.a.split_at_mut(l + 1);
            let prev = &prev[l];
            let z = &mut ws.z[l];
            for i in 0..layer.fan_out {
                let row = &w[i * layer.fan_in..(i + 1) * layer.fan_in];
                z[0][i] = b[i] + dot(row, &prev[0]);
                if order >= 1 {
                    z[1][i] = dot(row, &prev[1]);
                }
                if order >= 2 {
                    z[2][i] = dot(row, &prev[2]);
                }
            }
            if l == last {
                continue;
            }
            let next = &mut rest[0];
            for i in 0..layer.fan_out {
                let h = libm::tanh(z[0][i]);
                next[0][i] = h;
                if order >= 1 {
                    let h1 = 1.0 - h * h;
                    next[1][i] = h1 * z[1][i];
                    if order >= 2 {
                        let h2 = -2.0 * h * h1;
                        next[2][i] = h2 * z[1][i] * z[1][i] + h1 * z[2][i];
                    }
                }
            }
        }
    }

    fn reverse(&self, order: u8, seeds: [f64; 3], grad: &mut [f64], ws: &mut Workspace) {
        let order = usize::from(order);
        let last = self.layers.len() - 1;
        // Adjoints of the output pre-activation jet.
        ws.adj_z[0][0] = seeds[0];
        ws.adj_z[1][0] = if order >= 1 { seeds[1] } else { 0.0 };
        ws.adj_z[2][0] = if order >= 2 { seeds[2] } else { 0.0 };
        for l in (0..=last).rev() {
            let layer = self.layers[l];
            let prev = &ws.a[l];
            let (gw, gb) = grad[layer.weights..layer.bias + layer.fan_out]
                .split_at_mut(layer.bias - layer.weights);
            for i in 0..layer.fan_out {
                let zv = ws.adj_z[0][i];
                gb[i] += zv;
                let row = &mut gw[i * layer.fan_in..(i + 1) * layer.fan_in];
                axpy(zv, &prev[0], row);
                if order >= 1 {
                    axpy(ws.adj_z[1][i], &prev[1], row);
                }
                if order >= 2 {
                    axpy(ws.adj_z[2][i], &prev[2], row);
                }
            }
            if l == 0 {
                break;
            }
            // Adjoint of the activations feeding this layer: W^T adj_z.
            let w = &self.params[layer.weights..layer.bias];
            for k in 0..=order {
                let adj_a = &mut ws.adj_a[k][..layer.fan_in];
                adj_a.fill(0.0);
                for i in 0..layer.fan_out {
                    let row = &w[i * layer.fan_in..(i + 1) * layer.fan_in];
                    axpy(ws.adj_z[k][i], row, adj_a);
                }
            }
            // Through tanh into the previous pre-activation.
            let z_prev = &ws.z[l - 1];
            let h_prev = &ws.a[l][0];
            for j in 0..layer.fan_in {
                let h = h_prev[j];
                let h1 = 1.0 - h * h;
                let av = ws.adj_a[0][j];
                match order {
                    0 => {
                        ws.adj_z[0][j] = av * h1;
                    }
                    1 => {
                        let h2 = -2.0 * h * h1;
                        let ad = ws.adj_a[1][j];
                        let zd = z_prev[1][j];
                        ws.adj_z[0][j] = av * h1 + ad * h2 * zd;
                        ws.adj_z[1][j] = ad * h1;
                    }
                    _ => {
                        let h2 = -2.0 * h * h1;
                        let h3 = -2.0 * h1 * h1 - 2.0 * h * h2;
                        let ad = ws.adj_a[1][j];
                        let add = ws.adj_a[2][j];
                        let zd = z_prev[1][j];
                        let zdd = z_prev[2][j];
                        ws.adj_z[0][j] = av * h1 + ad * h2 * zd + add * (h3 * zd * zd + h2 * zdd);
                        ws.adj_z[1][j] = ad * h1 + add * 2.0 * h2 * zd;
                        ws.adj_z[2][j] = add * h1;
                    }
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Reusable buffers for [`Network::accumulate_gradient`].
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    // a[l][k]: activation jet component k entering layer l
    a: Vec<[Vec<f64>; 3]>,
    // z[l][k]: pre-activation jet component k of layer l
    z: Vec<[Vec<f64>; 3]>,
    adj_z: [Vec<f64>; 3],
    adj_a: [Vec<f64>; 3],
    sizes: Vec<usize>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, net: &Network) {
        if self.sizes == net.layer_sizes {
            return;
        }
        let sizes = &net.layer_sizes;
        let widest = sizes.iter().copied().max().unwrap_or(1);
        let triple = |n: usize| {
            [
                alloc::vec![0.0; n],
                alloc::vec![0.0; n],
                alloc::vec![0.0; n],
            ]
        };
        self.a = sizes[..sizes.len() - 1]
            .iter()
            .map(|&n| triple(n))
            .collect();
        self.z = sizes[1..].iter().map(|&n| triple(n)).collect();
        self.adj_z = triple(widest);
        self.adj_a = triple(widest);
        self.sizes = sizes.clone();
    }
}

/// Feature-major activations of a point batch, kept between
/// [`Network::forward_batch`] and [`Network::backward_batch`].
#[derive(Debug, Default, Clone)]
pub struct BatchActivations {
    n: usize,
    // layers[l]: input of layer l, fan_in x n
    layers: Vec<Vec<f64>>,
    output: Vec<f64>,
    adj: Vec<f64>,
    adj_prev: Vec<f64>,
}

impl BatchActivations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Network outputs of the last forward pass.
    pub fn outputs(&self) -> &[f64] {
        &self.output[..self.n]
    }

    fn resize(&mut self, net: &Network, n: usize) {
        let sizes = &net.layer_sizes;
        self.n = n;
        self.layers.resize_with(sizes.len() - 1, Vec::new);
        for (buf, &w) in self.layers.iter_mut().zip(sizes) {
            buf.resize(w * n, 0.0);
        }
        self.output.resize(n, 0.0);
        let widest = sizes.iter().copied().max().unwrap_or(1);
        self.adj.resize(widest * n, 0.0);
        self.adj_prev.resize(widest * n, 0.0);
    }
}

/// Gradient of a scalar loss, laid out like [`Network::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    values: Vec<f64>,
}

impl Gradient {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            values: alloc::vec![0.0; net.parameter_count()],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|g| g.is_finite())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}
