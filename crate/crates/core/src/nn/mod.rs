//! Small fully connected networks with tanh hidden layers, exact
//! reverse-mode gradients and an Adam optimizer.
//!
//! Parameters live in one flat vector, layer by layer, each layer storing its
//! `out x in` weight matrix row-major followed by its `out` biases. Gradients
//! and optimizer moments share that layout.

pub mod adam;
pub mod checkpoint;

use rand::Rng;

pub use adam::AdamState;

use crate::{Error, Result};

/// Output head of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Softmax over the outputs (policy).
    Softmax,
    /// Raw outputs (value function).
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    dims: Vec<usize>,
    head: Head,
    params: Vec<f64>,
}

/// Layer activations recorded by a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `activations[0]` is the input, then each hidden layer after tanh.
    pub activations: Vec<Vec<f64>>,
    /// Output layer before the head (logits for a policy).
    pub output: Vec<f64>,
}

/// Gradient with respect to every parameter, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients(vec![0.0; len])
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.0.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl DenseNet {
    /// All-zero network; mostly useful in tests.
    pub fn zeros(dims: &[usize], head: Head) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Shape(format!("invalid layer dims {dims:?}")));
        }
        Ok(Self {
            dims: dims.to_vec(),
            head,
            params: vec![0.0; param_count(dims)],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], head: Head, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims, head)?;
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], head: Head, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims, head)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape(format!(
                "{} parameters for dims {dims:?}, expected {}",
                params.len(),
                net.params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two dims")
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of (weights, biases) for layer `l`.
    pub fn layer_offsets(&self, layer: usize) -> (usize, usize) {
        let mut offset = 0;
        for w in self.dims.windows(2).take(layer) {
            offset += w[0] * w[1] + w[1];
        }
        (offset, offset + self.dims[layer] * self.dims[layer + 1])
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input of length {} for a network expecting {}",
                input.len(),
                self.input_dim()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        let n_layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(n_layers);
        let mut current = input.to_vec();
        let mut offset = 0;
        for (l, w) in self.dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let mut next: Vec<f64> = biases.to_vec();
            for (o, z) in next.iter_mut().enumerate() {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                *z += row.iter().zip(&current).map(|(w, x)| w * x).sum::<f64>();
            }
            if l + 1 < n_layers {
                next.iter_mut().for_each(|z| *z = z.tanh());
            }
            activations.push(std::mem::replace(&mut current, next));
            offset += fan_in * fan_out + fan_out;
        }
        Ok(ForwardCache {
            activations,
            output: current,
        })
    }

    /// Action probabilities of a softmax network.
    pub fn forward_policy(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if self.head != Head::Softmax {
            return Err(Error::Shape("forward_policy on a linear-head network".into()));
        }
        let cache = self.forward(input)?;
        Ok((softmax(&cache.output), cache))
    }

    /// Scalar output of a single-output linear network.
    pub fn forward_value(&self, input: &[f64]) -> Result<(f64, ForwardCache)> {
        if self.head != Head::Linear || self.output_dim() != 1 {
            return Err(Error::Shape("forward_value needs a linear head with one output".into()));
        }
        let cache = self.forward(input)?;
        Ok((cache.output[0], cache))
    }

    /// Gradients of a scalar loss given its gradient with respect to the
    /// pre-head outputs (logits, or the value itself).
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros(self.n_params());
        self.backward_into(cache, grad_output, &mut grads)?;
        Ok(grads)
    }

    /// Like [`DenseNet::backward`] but accumulates into `grads`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        let n_layers = self.dims.len() - 1;
        if grad_output.len() != self.output_dim()
            || cache.activations.len() != n_layers
            || cache
                .activations
                .iter()
                .zip(&self.dims)
                .any(|(a, &d)| a.len() != d)
            || grads.0.len() != self.n_params()
        {
            return Err(Error::Shape("forward cache or gradient does not match network".into()));
        }

        let mut delta = grad_output.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let input = &cache.activations[l];
            for o in 0..fan_out {
                let d = delta[o];
                grads.0[b_off + o] += d;
                if d != 0.0 {
                    let row = &mut grads.0[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
            }
            if l > 0 {
                let weights = &self.params[w_off..b_off];
                let mut prev = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                        *p += w * d;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        Ok(())
    }
}
