//! Central finite-difference verification of analytic gradients.

use super::params::{Parameters, TensorRole};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor for the relative error, so that vanishing
    /// gradients are compared in absolute terms.
    pub floor: f64,
    /// Check at most this many evenly spaced entries per tensor.
    pub max_entries_per_tensor: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            floor: 1e-5,
            max_entries_per_tensor: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TensorReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorReport>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance && self.max_rel_error.is_finite()
    }

    pub fn worst(&self) -> Option<&TensorReport> {
        self.tensors
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn sample_indices(len: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if len > m && m > 0 => (0..m).map(|i| i * len / m).collect(),
        _ => (0..len).collect(),
    }
}

/// Compares `analytic` (a gradient-shaped clone of `model`) with central
/// differences of `loss` taken around `model`, tensor by tensor.
pub fn check_gradients<M, F>(model: &M, analytic: &M, loss: F, cfg: &GradCheckConfig) -> GradCheckReport
where
    M: Parameters + Clone,
    F: Fn(&M) -> f64,
{
    let mut layout = Vec::new();
    model.visit("", &mut |name, m, role| {
        if role == TensorRole::Trainable {
            layout.push((name.to_string(), m.len()));
        }
    });
    let mut grads = Vec::new();
    analytic.visit("", &mut |_, m, role| {
        if role == TensorRole::Trainable {
            grads.push(m.as_slice().to_vec());
        }
    });

    let mut tensors = Vec::with_capacity(layout.len());
    let mut worst = 0.0f64;
    for (t, (name, len)) in layout.iter().enumerate() {
        let idxs = sample_indices(*len, cfg.max_entries_per_tensor);
        let mut tmax = 0.0f64;
        for &i in &idxs {
            let plus = perturbed(model, t, i, cfg.step);
            let minus = perturbed(model, t, i, -cfg.step);
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * cfg.step);
            let err = relative_error(grads[t][i], numeric, cfg.floor);
            tmax = if err.is_nan() { f64::INFINITY } else { tmax.max(err) };
        }
        worst = worst.max(tmax);
        tensors.push(TensorReport {
            name: name.clone(),
            checked: idxs.len(),
            max_rel_error: tmax,
        });
    }
    GradCheckReport {
        tensors,
        max_rel_error: worst,
        tolerance: cfg.tolerance,
    }
}

fn perturbed<M: Parameters + Clone>(model: &M, tensor: usize, entry: usize, delta: f64) -> M {
    let mut m = model.clone();
    let mut t = 0;
    m.visit_mut("", &mut |_, mat, role| {
        if role == TensorRole::Trainable {
            if t == tensor {
                mat.as_mut_slice()[entry] += delta;
            }
            t += 1;
        }
    });
    m
}

/// Finite-difference check of a gradient with respect to a plain input
/// vector. Returns the maximum relative error.
pub fn check_input_gradient<F>(x: &[f64], analytic: &[f64], loss: F, cfg: &GradCheckConfig) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut worst = 0.0f64;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + cfg.step;
        let lp = loss(&xp);
        xp[i] = x[i] - cfg.step;
        let lm = loss(&xp);
        xp[i] = x[i];
        let numeric = (lp - lm) / (2.0 * cfg.step);
        let err = relative_error(analytic[i], numeric, cfg.floor);
        worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
    }
    worst
}
