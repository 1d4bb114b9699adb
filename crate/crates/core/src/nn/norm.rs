//! Batch normalization over a batch of vectors, and L2 normalization.

use super::params::{join, Parameters, TensorRole};
use super::{dot, norm, Matrix};
use crate::error::{Error, Result};

const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Per-batch statistics; running statistics are updated.
    Train,
    /// Frozen running statistics.
    Inference,
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Matrix,
    pub beta: Matrix,
    pub running_mean: Matrix,
    pub running_var: Matrix,
    /// Weight of the old running value in the exponential average.
    pub momentum: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BatchNormCache {
    x_hat: Vec<Vec<f64>>,
    inv_std: Vec<f64>,
    train: bool,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Matrix::column(vec![1.0; features]),
            beta: Matrix::zeros(features, 1),
            running_mean: Matrix::zeros(features, 1),
            running_var: Matrix::column(vec![1.0; features]),
            momentum: 0.9,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.rows()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features() {
            return Err(Error::dim("batch norm input", self.features(), x.len()));
        }
        Ok(())
    }

    /// Single-vector inference with frozen statistics.
    pub fn apply_inference(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let (m, v, g, b) = (
            self.running_mean.as_slice(),
            self.running_var.as_slice(),
            self.gamma.as_slice(),
            self.beta.as_slice(),
        );
        Ok((0..x.len())
            .map(|k| g[k] * (x[k] - m[k]) / (v[k] + BN_EPS).sqrt() + b[k])
            .collect())
    }

    /// Normalizes a batch. In training mode the running statistics are
    /// updated, so a mutable receiver is required; use
    /// [`BatchNorm::forward_batch_frozen`] to evaluate train-mode statistics
    /// without side effects.
    pub fn forward_batch(
        &mut self,
        batch: &[Vec<f64>],
        mode: NormMode,
    ) -> Result<(Vec<Vec<f64>>, BatchNormCache)> {
        let out = self.forward_batch_frozen(batch, mode)?;
        if mode == NormMode::Train {
            self.update_running(batch);
        }
        Ok(out)
    }

    /// Folds the statistics of `batch` into the running estimates.
    pub fn update_running(&mut self, batch: &[Vec<f64>]) {
        if batch.is_empty() {
            return;
        }
        let (mean, var) = batch_stats(batch);
        let n = batch.len() as f64;
        let unbiased = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        let mo = self.momentum;
        for (rm, m) in self.running_mean.as_mut_slice().iter_mut().zip(&mean) {
            *rm = mo * *rm + (1.0 - mo) * m;
        }
        for (rv, v) in self.running_var.as_mut_slice().iter_mut().zip(&var) {
            *rv = mo * *rv + (1.0 - mo) * v * unbiased;
        }
    }

    pub fn forward_batch_frozen(
        &self,
        batch: &[Vec<f64>],
        mode: NormMode,
    ) -> Result<(Vec<Vec<f64>>, BatchNormCache)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch norm"));
        }
        for x in batch {
            self.check(x)?;
        }
        let f = self.features();
        let (mean, inv_std) = match mode {
            NormMode::Train => {
                if batch.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "batch norm in training mode needs at least two samples".into(),
                    ));
                }
                let (mean, var) = batch_stats(batch);
                (mean, var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect::<Vec<_>>())
            }
            NormMode::Inference => (
                self.running_mean.as_slice().to_vec(),
                self.running_var
                    .as_slice()
                    .iter()
                    .map(|v| 1.0 / (v + BN_EPS).sqrt())
                    .collect(),
            ),
        };
        let g = self.gamma.as_slice();
        let b = self.beta.as_slice();
        let mut x_hat = Vec::with_capacity(batch.len());
        let mut out = Vec::with_capacity(batch.len());
        for x in batch {
            let xh: Vec<f64> = (0..f).map(|k| (x[k] - mean[k]) * inv_std[k]).collect();
            out.push((0..f).map(|k| g[k] * xh[k] + b[k]).collect());
            x_hat.push(xh);
        }
        Ok((
            out,
            BatchNormCache {
                x_hat,
                inv_std,
                train: mode == NormMode::Train,
            },
        ))
    }

    pub fn backward_batch(
        &self,
        cache: &BatchNormCache,
        d_out: &[Vec<f64>],
        grads: &mut BatchNorm,
    ) -> Result<Vec<Vec<f64>>> {
        if cache.x_hat.is_empty() {
            return Err(Error::BackwardBeforeForward("batch norm"));
        }
        if d_out.len() != cache.x_hat.len() {
            return Err(Error::dim("batch norm upstream batch", cache.x_hat.len(), d_out.len()));
        }
        let f = self.features();
        let n = d_out.len() as f64;
        let g = self.gamma.as_slice();
        let mut sum_dxh = vec![0.0; f];
        let mut sum_dxh_xh = vec![0.0; f];
        let mut d_xhat = Vec::with_capacity(d_out.len());
        for (dy, xh) in d_out.iter().zip(&cache.x_hat) {
            if dy.len() != f {
                return Err(Error::dim("batch norm upstream gradient", f, dy.len()));
            }
            let dxh: Vec<f64> = (0..f).map(|k| dy[k] * g[k]).collect();
            for k in 0..f {
                grads.gamma.as_mut_slice()[k] += dy[k] * xh[k];
                grads.beta.as_mut_slice()[k] += dy[k];
                sum_dxh[k] += dxh[k];
                sum_dxh_xh[k] += dxh[k] * xh[k];
            }
            d_xhat.push(dxh);
        }
        Ok(d_xhat
            .iter()
            .zip(&cache.x_hat)
            .map(|(dxh, xh)| {
                (0..f)
                    .map(|k| {
                        if cache.train {
                            cache.inv_std[k] / n * (n * dxh[k] - sum_dxh[k] - xh[k] * sum_dxh_xh[k])
                        } else {
                            cache.inv_std[k] * dxh[k]
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

fn batch_stats(batch: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let f = batch[0].len();
    let n = batch.len() as f64;
    let mut mean = vec![0.0; f];
    for x in batch {
        super::axpy(1.0 / n, x, &mut mean);
    }
    let mut var = vec![0.0; f];
    for x in batch {
        for k in 0..f {
            let d = x[k] - mean[k];
            var[k] += d * d / n;
        }
    }
    (mean, var)
}

impl Parameters for BatchNorm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        f(&join(prefix, "gamma"), &self.gamma, TensorRole::Trainable);
        f(&join(prefix, "beta"), &self.beta, TensorRole::Trainable);
        f(&join(prefix, "running_mean"), &self.running_mean, TensorRole::Buffer);
        f(&join(prefix, "running_var"), &self.running_var, TensorRole::Buffer);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        f(&join(prefix, "gamma"), &mut self.gamma, TensorRole::Trainable);
        f(&join(prefix, "beta"), &mut self.beta, TensorRole::Trainable);
        f(&join(prefix, "running_mean"), &mut self.running_mean, TensorRole::Buffer);
        f(&join(prefix, "running_var"), &mut self.running_var, TensorRole::Buffer);
    }
}

/// `x / |x|`; errors on a zero vector.
pub fn l2_normalize(x: &[f64]) -> Result<Vec<f64>> {
    let n = norm(x);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(
            "cannot L2-normalize a zero or non-finite vector".into(),
        ));
    }
    Ok(x.iter().map(|v| v / n).collect())
}

/// Gradient through `y = x / |x|` given the output `y`, the input norm and
/// the upstream gradient.
pub fn l2_normalize_backward(y: &[f64], input_norm: f64, dy: &[f64]) -> Vec<f64> {
    let inner = dot(y, dy);
    y.iter()
        .zip(dy)
        .map(|(y, d)| (d - y * inner) / input_norm)
        .collect()
}
