//! Additive attention pooling with a learned context query.
//!
//! `u_j = tanh(W h_j + b)`, `a = softmax_j(u_j . c)`, output `sum_j a_j h_j`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::params::{join, Parameters, TensorRole};
use super::{axpy, dot, softmax, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AttentionPool {
    pub projection: Matrix,
    pub bias: Matrix,
    pub context: Matrix,
}

#[derive(Debug, Clone, Default)]
pub struct AttentionCache {
    states: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl AttentionCache {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl AttentionPool {
    /// Projection uniform in `±sqrt(1/input)`, zero bias, unit-norm random
    /// context vector.
    pub fn new<R: Rng + ?Sized>(input: usize, attention: usize, rng: &mut R) -> Self {
        let bound = (1.0 / input.max(1) as f64).sqrt();
        let mut c: Vec<f64> = (0..attention).map(|_| rng.sample(StandardNormal)).collect();
        let n = super::norm(&c).max(f64::MIN_POSITIVE);
        c.iter_mut().for_each(|v| *v /= n);
        Self {
            projection: Matrix::uniform(attention, input, bound, rng),
            bias: Matrix::zeros(attention, 1),
            context: Matrix::column(c),
        }
    }

    pub fn input_size(&self) -> usize {
        self.projection.cols()
    }

    pub fn attention_size(&self) -> usize {
        self.projection.rows()
    }

    /// Returns `(pooled, weights, cache)`.
    pub fn forward(&self, states: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>, AttentionCache)> {
        if states.is_empty() {
            return Err(Error::Empty("attention pool"));
        }
        let dim = self.input_size();
        let mut u = Vec::with_capacity(states.len());
        let mut scores = Vec::with_capacity(states.len());
        for h in states {
            if h.len() != dim {
                return Err(Error::dim("attention pool state", dim, h.len()));
            }
            let mut pre = self.bias.as_slice().to_vec();
            self.projection.matvec_acc(h, &mut pre);
            let uj: Vec<f64> = pre.into_iter().map(f64::tanh).collect();
            scores.push(dot(&uj, self.context.as_slice()));
            u.push(uj);
        }
        let weights = softmax(&scores);
        let mut pooled = vec![0.0; dim];
        for (a, h) in weights.iter().zip(states) {
            axpy(*a, h, &mut pooled);
        }
        let cache = AttentionCache {
            states: states.to_vec(),
            u,
            weights: weights.clone(),
        };
        Ok((pooled, weights, cache))
    }

    /// Returns the gradient with respect to each input state.
    pub fn backward(
        &self,
        cache: &AttentionCache,
        d_pooled: &[f64],
        grads: &mut AttentionPool,
    ) -> Result<Vec<Vec<f64>>> {
        if cache.states.is_empty() {
            return Err(Error::BackwardBeforeForward("attention pool"));
        }
        if d_pooled.len() != self.input_size() {
            return Err(Error::dim("attention upstream gradient", self.input_size(), d_pooled.len()));
        }
        let a = &cache.weights;
        let da: Vec<f64> = cache.states.iter().map(|h| dot(h, d_pooled)).collect();
        let inner = dot(a, &da);
        let ds: Vec<f64> = a.iter().zip(&da).map(|(a, d)| a * (d - inner)).collect();
        let c = self.context.as_slice();
        let mut d_states = Vec::with_capacity(cache.states.len());
        for ((h, u), (&aj, &dsj)) in cache.states.iter().zip(&cache.u).zip(a.iter().zip(&ds)) {
            let mut dh: Vec<f64> = d_pooled.iter().map(|d| aj * d).collect();
            axpy(dsj, u, grads.context.as_mut_slice());
            let dpre: Vec<f64> = u.iter().zip(c).map(|(u, c)| dsj * c * (1.0 - u * u)).collect();
            grads.projection.add_outer(&dpre, h);
            axpy(1.0, &dpre, grads.bias.as_mut_slice());
            self.projection.matvec_t_acc(&dpre, &mut dh);
            d_states.push(dh);
        }
        Ok(d_states)
    }
}

impl Parameters for AttentionPool {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        f(&join(prefix, "projection"), &self.projection, TensorRole::Trainable);
        f(&join(prefix, "bias"), &self.bias, TensorRole::Trainable);
        f(&join(prefix, "context"), &self.context, TensorRole::Trainable);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        f(&join(prefix, "projection"), &mut self.projection, TensorRole::Trainable);
        f(&join(prefix, "bias"), &mut self.bias, TensorRole::Trainable);
        f(&join(prefix, "context"), &mut self.context, TensorRole::Trainable);
    }
}
