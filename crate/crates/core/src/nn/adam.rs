//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use super::params::{Parameters, TensorRole};
use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn with_lr(learning_rate: f64) -> Self {
        Self::new(AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to the trainable tensors of `params` using the
    /// matching tensors of `grads`.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let mut g: Vec<(String, Matrix)> = Vec::new();
        grads.visit("", &mut |name, m, role| {
            if role == TensorRole::Trainable {
                g.push((name.to_string(), m.clone()));
            }
        });
        let mut shapes = Vec::new();
        params.visit("", &mut |name, m, role| {
            if role == TensorRole::Trainable {
                shapes.push((name.to_string(), m.shape()));
            }
        });
        if shapes.len() != g.len() {
            return Err(Error::dim("adam parameter list", shapes.len(), g.len()));
        }
        for ((pn, ps), (_, gm)) in shapes.iter().zip(&g) {
            if *ps != gm.shape() {
                return Err(Error::dim(format!("adam gradient for {pn}"), ps.0 * ps.1, gm.len()));
            }
        }
        if self.first.is_empty() {
            self.first = g.iter().map(|(_, m)| Matrix::zeros(m.rows(), m.cols())).collect();
            self.second = self.first.clone();
        } else if self.first.len() != g.len()
            || self.first.iter().zip(&g).any(|(a, (_, b))| a.shape() != b.shape())
        {
            return Err(Error::InvalidArgument(
                "adam moments do not match the parameter layout".into(),
            ));
        }

        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);

        let mut idx = 0;
        let first = &mut self.first;
        let second = &mut self.second;
        params.visit_mut("", &mut |_, p, role| {
            if role != TensorRole::Trainable {
                return;
            }
            let gs = g[idx].1.as_slice();
            let m = first[idx].as_mut_slice();
            let v = second[idx].as_mut_slice();
            for (k, w) in p.as_mut_slice().iter_mut().enumerate() {
                m[k] = b1 * m[k] + (1.0 - b1) * gs[k];
                v[k] = b2 * v[k] + (1.0 - b2) * gs[k] * gs[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
        Ok(())
    }
}
