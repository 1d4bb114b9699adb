use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{join, Parameters, TensorRole};
use super::{softmax, softmax_backward, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
    Softmax,
}

/// Fully connected layer `activation(W x + b)`.
#[derive(Debug, Clone)]
pub struct Dense {
    name: String,
    pub weight: Matrix,
    pub bias: Matrix,
    pub activation: Activation,
}

/// Intermediates kept by [`Dense::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct DenseCache {
    input: Vec<f64>,
    output: Vec<f64>,
}

impl DenseCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl Dense {
    /// Weights uniform in `±sqrt(1/fan_in)`, zero bias.
    pub fn new<R: Rng + ?Sized>(
        name: impl Into<String>,
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = (1.0 / input.max(1) as f64).sqrt();
        Self {
            name: name.into(),
            weight: Matrix::uniform(output, input, bound, rng),
            bias: Matrix::zeros(output, 1),
            activation,
        }
    }

    pub fn from_parts(
        name: impl Into<String>,
        weight: Matrix,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let name = name.into();
        if bias.len() != weight.rows() {
            return Err(Error::dim(format!("{name} bias"), weight.rows(), bias.len()));
        }
        Ok(Self {
            name,
            weight,
            bias: Matrix::column(bias),
            activation,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn zero(&mut self) {
        self.weight.fill(0.0);
        self.bias.fill(0.0);
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        let y = self.apply(x)?;
        Ok((
            y.clone(),
            DenseCache {
                input: x.to_vec(),
                output: y,
            },
        ))
    }

    /// Forward pass without caching.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_size() {
            return Err(Error::dim(
                format!("dense layer `{}` input", self.name),
                self.input_size(),
                x.len(),
            ));
        }
        let mut pre = self.bias.as_slice().to_vec();
        self.weight.matvec_acc(x, &mut pre);
        Ok(match self.activation {
            Activation::Linear => pre,
            Activation::Tanh => pre.into_iter().map(f64::tanh).collect(),
            Activation::Relu => pre.into_iter().map(|v| v.max(0.0)).collect(),
            Activation::Softmax => softmax(&pre),
        })
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, cache: &DenseCache, dy: &[f64], grads: &mut Dense) -> Result<Vec<f64>> {
        let dpre = self.param_grads(cache, dy, grads)?;
        let mut dx = vec![0.0; self.input_size()];
        self.weight.matvec_t_acc(&dpre, &mut dx);
        Ok(dx)
    }

    /// Accumulates parameter gradients and returns the pre-activation
    /// gradient.
    fn param_grads(&self, cache: &DenseCache, dy: &[f64], grads: &mut Dense) -> Result<Vec<f64>> {
        if cache.input.is_empty() && self.input_size() > 0 {
            return Err(Error::BackwardBeforeForward("dense layer"));
        }
        if dy.len() != self.output_size() {
            return Err(Error::dim(
                format!("dense layer `{}` upstream gradient", self.name),
                self.output_size(),
                dy.len(),
            ));
        }
        let y = &cache.output;
        let dpre: Vec<f64> = match self.activation {
            Activation::Linear => dy.to_vec(),
            Activation::Tanh => dy.iter().zip(y).map(|(d, y)| d * (1.0 - y * y)).collect(),
            Activation::Relu => dy
                .iter()
                .zip(y)
                .map(|(d, y)| if *y > 0.0 { *d } else { 0.0 })
                .collect(),
            Activation::Softmax => softmax_backward(y, dy),
        };
        grads.weight.add_outer(&dpre, &cache.input);
        super::axpy(1.0, &dpre, grads.bias.as_mut_slice());
        Ok(dpre)
    }
}

impl Parameters for Dense {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        f(&join(prefix, "weight"), &self.weight, TensorRole::Trainable);
        f(&join(prefix, "bias"), &self.bias, TensorRole::Trainable);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        f(&join(prefix, "weight"), &mut self.weight, TensorRole::Trainable);
        f(&join(prefix, "bias"), &mut self.bias, TensorRole::Trainable);
    }
}

/// Stack of dense layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone, Default)]
pub struct MlpCache {
    layers: Vec<DenseCache>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(|c| c.output()).unwrap_or(&[])
    }
}

impl Mlp {
    /// Hidden layers share `hidden_activation`; the last layer uses
    /// `output_activation`.
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n {
                    output_activation
                } else {
                    hidden_activation
                };
                Dense::new(format!("{name}.{i}"), sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().unwrap().output_size()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.apply(&h)?;
        }
        Ok(h)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            let (y, c) = layer.forward(&h)?;
            caches.push(c);
            h = y;
        }
        Ok((h, MlpCache { layers: caches }))
    }

    pub fn backward(&self, cache: &MlpCache, dy: &[f64], grads: &mut Mlp) -> Result<Vec<f64>> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::BackwardBeforeForward("mlp"));
        }
        let mut d = dy.to_vec();
        for ((layer, c), g) in self
            .layers
            .iter()
            .zip(&cache.layers)
            .zip(grads.layers.iter_mut())
            .rev()
        {
            d = layer.backward(c, &d, g)?;
        }
        Ok(d)
    }

    /// Like [`Mlp::backward`] but skips the input gradient, which training
    /// never needs.
    pub fn accumulate_grads(&self, cache: &MlpCache, dy: &[f64], grads: &mut Mlp) -> Result<()> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::BackwardBeforeForward("mlp"));
        }
        let mut d = dy.to_vec();
        for (i, ((layer, c), g)) in self.layers.iter().zip(&cache.layers).zip(grads.layers.iter_mut()).enumerate().rev() {
            if i == 0 {
                layer.param_grads(c, &d, g)?;
            } else {
                d = layer.backward(c, &d, g)?;
            }
        }
        Ok(())
    }
}

impl Parameters for Mlp {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&join(prefix, &i.to_string()), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &i.to_string()), f);
        }
    }
}
