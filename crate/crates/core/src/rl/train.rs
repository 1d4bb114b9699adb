//! REINFORCE with a learned baseline.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{discounted_returns, policy_loss, value_loss};
use crate::agent::Agent;
use crate::env::{rollout, EpisodeTrace, RolloutConfig, VideoEmbeddings, VideoSpec};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, quantize_to_f32, Adam, Parameters};
use crate::vdan::Vdan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentTrainConfig {
    pub gamma: f64,
    /// Width of the terminal speed-up reward.
    pub sigma: f64,
    /// Optional starting width, annealed linearly to `sigma` over
    /// `sigma_anneal_epochs`.
    pub sigma_start: Option<f64>,
    pub sigma_anneal_epochs: usize,
    /// Entropy weight.
    pub beta: f64,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub epochs: usize,
    /// Episodes per epoch; `None` runs one per training video.
    pub episodes_per_epoch: Option<usize>,
    /// Inclusive range the per-episode target speed-up is drawn from.
    pub target_range: (usize, usize),
    pub clip_norm: f64,
    /// Divide each episode's rewards by its terminal weight before
    /// computing returns. The rescale is positive and constant within an
    /// episode, so it leaves each episode's optimal policy unchanged while
    /// keeping value targets on a scale the state can predict.
    pub scale_by_lambda: bool,
    pub seed: u64,
}

impl Default for AgentTrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            sigma: 0.5,
            sigma_start: None,
            sigma_anneal_epochs: 0,
            beta: 0.01,
            policy_lr: 5e-5,
            value_lr: 1e-3,
            epochs: 100,
            episodes_per_epoch: None,
            target_range: (2, 20),
            clip_norm: 5.0,
            scale_by_lambda: true,
            seed: 0,
        }
    }
}

impl AgentTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config("gamma must be in (0, 1]".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        if let Some(s) = self.sigma_start {
            if !(s > 0.0) {
                return Err(Error::Config("sigma_start must be positive".into()));
            }
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Config("beta must be non-negative".into()));
        }
        if !(self.policy_lr >= 0.0) || !(self.value_lr >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        let (lo, hi) = self.target_range;
        if lo == 0 || lo > hi {
            return Err(Error::Config("target_range must be a non-empty range starting at 1 or more".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config("clip_norm must be positive".into()));
        }
        Ok(())
    }
}

impl AgentTrainConfig {
    /// Terminal reward width used during `epoch` (1-based).
    pub fn sigma_at(&self, epoch: usize) -> f64 {
        match self.sigma_start {
            Some(s0) if self.sigma_anneal_epochs > 0 => {
                let frac = ((epoch - 1) as f64 / self.sigma_anneal_epochs as f64).min(1.0);
                s0 + (self.sigma - s0) * frac
            }
            _ => self.sigma,
        }
    }
}

/// Separate optimizer states for the policy and value networks.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub policy: Adam,
    pub value: Adam,
}

impl Optimizers {
    pub fn new(config: &AgentTrainConfig) -> Self {
        Self {
            policy: Adam::with_lr(config.policy_lr),
            value: Adam::with_lr(config.value_lr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub policy_grad_norm: f64,
    pub value_grad_norm: f64,
}

/// One gradient step on each network from a single episode.
pub fn update_from_episode(
    agent: &mut Agent,
    opt: &mut Optimizers,
    states: &[Vec<f64>],
    actions: &[usize],
    rewards: &[f64],
    config: &AgentTrainConfig,
) -> Result<UpdateStats> {
    let returns = discounted_returns(rewards, config.gamma)?;
    let mut vl = value_loss(&agent.value, states, &returns)?;
    let advantages: Vec<f64> = returns.iter().zip(&vl.predictions).map(|(r, v)| r - v).collect();
    let mut pl = policy_loss(&agent.policy, states, actions, &advantages, config.beta)?;
    let pn = clip_global_norm(&mut pl.grads, config.clip_norm);
    let vn = clip_global_norm(&mut vl.grads, config.clip_norm);
    if !pn.is_finite() || !vn.is_finite() {
        return Err(Error::NonFinite("agent gradients".into()));
    }
    opt.policy.step(&mut agent.policy, &pl.grads)?;
    opt.value.step(&mut agent.value, &vl.grads)?;
    Ok(UpdateStats {
        policy_loss: pl.loss,
        value_loss: vl.loss,
        entropy: pl.entropy,
        policy_grad_norm: pn,
        value_grad_norm: vn,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEpochRecord {
    pub epoch: usize,
    /// Mean undiscounted episode reward.
    pub mean_return: f64,
    pub mean_abs_speed_error: f64,
    /// Mean per-step policy entropy (nats).
    pub mean_entropy: f64,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub agent: Agent,
    pub log: Vec<AgentEpochRecord>,
}

fn describe(trace: &EpisodeTrace) -> String {
    let tail: Vec<f64> = trace.rewards.iter().rev().take(3).copied().collect();
    format!(
        "video `{}`, target {}, {} steps, last rewards {:?}",
        trace.video_id,
        trace.target,
        trace.len(),
        tail
    )
}

/// Trains `agent` on `videos` with `encoder` frozen. Each episode draws a
/// video (cycling through a shuffled order) and a target speed-up.
pub fn train_agent(
    mut agent: Agent,
    videos: &[VideoSpec],
    encoder: &Vdan,
    config: &AgentTrainConfig,
    mut on_epoch: impl FnMut(&AgentEpochRecord),
) -> Result<TrainedAgent> {
    config.validate()?;
    if videos.is_empty() {
        return Err(Error::Empty("training videos"));
    }
    if config.target_range.1 > agent.config.nu_max {
        return Err(Error::Config(format!(
            "target_range upper bound {} exceeds nu_max {}",
            config.target_range.1, agent.config.nu_max
        )));
    }
    let caches: Vec<VideoEmbeddings<'_>> = videos
        .iter()
        .map(|v| VideoEmbeddings::new(v, encoder))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = Optimizers::new(config);
    let per_epoch = config.episodes_per_epoch.unwrap_or(videos.len()).max(1);
    let mut order: Vec<usize> = Vec::new();
    let start = Instant::now();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let (mut ret, mut err, mut ent, mut steps) = (0.0, 0.0, 0.0, 0usize);
        for _ in 0..per_epoch {
            if order.is_empty() {
                order = (0..videos.len()).collect();
                order.shuffle(&mut rng);
            }
            let vi = order.pop().expect("non-empty");
            let target = rng.random_range(config.target_range.0..=config.target_range.1);
            let rc = RolloutConfig {
                sigma: config.sigma_at(epoch),
                ..RolloutConfig::sample(target)
            };
            let trace = rollout(&caches[vi], &agent, &rc, &mut rng)?;
            let actions: Vec<usize> = trace.actions.iter().map(|a| a.index()).collect();
            let scaled: Vec<f64>;
            let rewards = if config.scale_by_lambda && trace.lambda > 0.0 {
                scaled = trace.rewards.iter().map(|r| r / trace.lambda).collect();
                &scaled
            } else {
                &trace.rewards
            };
            let stats = update_from_episode(&mut agent, &mut opt, &trace.states, &actions, rewards, config)
                .map_err(|e| match e {
                    Error::NonFinite(m) => Error::NonFinite(format!("{m} at epoch {epoch}; {}", describe(&trace))),
                    other => other,
                })?;
            if !agent.all_finite() {
                return Err(Error::NonFinite(format!("agent parameters at epoch {epoch}; {}", describe(&trace))));
            }
            ret += trace.total_reward();
            err += (trace.terminal_speedup - target as f64).abs();
            ent += stats.entropy;
            steps += trace.len();
        }
        let record = AgentEpochRecord {
            epoch,
            mean_return: ret / per_epoch as f64,
            mean_abs_speed_error: err / per_epoch as f64,
            mean_entropy: ent / steps.max(1) as f64,
            wall_time_ms: start.elapsed().as_millis(),
        };
        log::info!(
            "agent epoch {epoch}: return {:.2} |speed error| {:.3} entropy {:.3}",
            record.mean_return,
            record.mean_abs_speed_error,
            record.mean_entropy
        );
        on_epoch(&record);
        log.push(record);
    }
    quantize_to_f32(&mut agent);
    Ok(TrainedAgent { agent, log })
}
