//! Returns, the entropy-regularized policy-gradient loss and the value
//! regression loss.

use crate::error::{Error, Result};
use crate::nn::{softmax, Mlp, Parameters};

/// `R_t = r_t + gamma R_{t+1}`, `R_T = r_T`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::Empty("reward series"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside (0, 1]")));
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PolicyLoss {
    pub loss: f64,
    /// Sum of per-step entropies.
    pub entropy: f64,
    pub grads: Mlp,
}

/// `-sum_t log pi(a_t | s_t) A_t - beta sum_t H(pi(. | s_t))` for a logit
/// network, with its gradient. Advantages are treated as constants.
pub fn policy_loss(
    policy: &Mlp,
    states: &[Vec<f64>],
    actions: &[usize],
    advantages: &[f64],
    beta: f64,
) -> Result<PolicyLoss> {
    if states.len() != actions.len() || states.len() != advantages.len() {
        return Err(Error::dim("policy loss inputs", states.len(), actions.len().min(advantages.len())));
    }
    let mut grads = policy.zeros_like();
    let mut loss = 0.0;
    let mut total_h = 0.0;
    for ((s, &a), &adv) in states.iter().zip(actions).zip(advantages) {
        let (logits, cache) = policy.forward(s)?;
        if a >= logits.len() {
            return Err(Error::InvalidArgument(format!("action {a} out of range")));
        }
        let p = softmax(&logits);
        let logp: Vec<f64> = p.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
        let h: f64 = -p.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        loss += -logp[a] * adv - beta * h;
        total_h += h;
        let dz: Vec<f64> = (0..p.len())
            .map(|k| {
                let onehot = if k == a { 1.0 } else { 0.0 };
                -adv * (onehot - p[k]) + beta * p[k] * (logp[k] + h)
            })
            .collect();
        policy.accumulate_grads(&cache, &dz, &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("policy loss".into()));
    }
    Ok(PolicyLoss {
        loss,
        entropy: total_h,
        grads,
    })
}

#[derive(Debug, Clone)]
pub struct ValueLoss {
    pub loss: f64,
    pub predictions: Vec<f64>,
    pub grads: Mlp,
}

/// `sum_t (v(s_t) - R_t)^2` for a single-output network.
pub fn value_loss(value: &Mlp, states: &[Vec<f64>], returns: &[f64]) -> Result<ValueLoss> {
    if states.len() != returns.len() {
        return Err(Error::dim("value loss inputs", states.len(), returns.len()));
    }
    let mut grads = value.zeros_like();
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(states.len());
    for (s, &r) in states.iter().zip(returns) {
        let (v, cache) = value.forward(s)?;
        let err = v[0] - r;
        loss += err * err;
        predictions.push(v[0]);
        value.accumulate_grads(&cache, &[2.0 * err], &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("value loss".into()));
    }
    Ok(ValueLoss {
        loss,
        predictions,
        grads,
    })
}
