//! Episode rollout and rewards.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::video::VideoSpec;
use crate::agent::{nrpe, select_action, skip_encoding, Action, Agent, AgentConfig, Kinematics, SelectMode};
use crate::error::{Error, Result};
use crate::nn::dot;
use crate::vdan::{DocumentContext, Vdan};

/// Semantic reward `alignment` before the end, Gaussian speed-up reward
/// `lambda * exp(-0.5 ((S_T - S*) / sigma)^2)` at the final step.
pub fn reward(alignment: f64, is_terminal: bool, achieved: f64, target: f64, lambda: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("reward width must be positive, got {sigma}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("terminal weight must be non-negative, got {lambda}")));
    }
    if is_terminal {
        // floored so far misses stay strictly positive instead of underflowing
        let g = (-0.5 * ((achieved - target) / sigma).powi(2)).exp().max(f64::MIN_POSITIVE);
        Ok(lambda * g)
    } else {
        Ok(alignment)
    }
}

/// Embeddings of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEmbedding {
    pub e_d: Vec<f64>,
    pub e_v: Vec<f64>,
    pub alignment: f64,
}

/// Per-video embedding cache keyed on the clip window start. Sentence
/// vectors are computed once; the clip-conditioned document embedding is
/// computed on first use of each frame.
#[derive(Debug)]
pub struct VideoEmbeddings<'a> {
    pub video: &'a VideoSpec,
    encoder: &'a Vdan,
    context: DocumentContext,
    frames: Vec<OnceLock<FrameEmbedding>>,
}

impl<'a> VideoEmbeddings<'a> {
    pub fn new(video: &'a VideoSpec, encoder: &'a Vdan) -> Result<Self> {
        if video.feature_dim() != encoder.feature_dim() {
            return Err(Error::dim(
                format!("clip features of video `{}`", video.id),
                encoder.feature_dim(),
                video.feature_dim(),
            ));
        }
        Ok(Self {
            video,
            encoder,
            context: encoder.document_context(&video.document)?,
            frames: (0..video.num_frames()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.encoder.embed_dim()
    }

    pub fn frame(&self, f: usize) -> Result<&FrameEmbedding> {
        let slot = self
            .frames
            .get(f.wrapping_sub(1))
            .ok_or_else(|| Error::InvalidArgument(format!("frame {f} outside [1, {}]", self.frames.len())))?;
        if let Some(e) = slot.get() {
            return Ok(e);
        }
        let phi = self.video.clip_at(f)?;
        let e_d = self.encoder.embed_document_with(&self.context, &phi)?;
        let e_v = self.encoder.project_clip(&phi)?;
        let alignment = dot(&e_d, &e_v).clamp(-1.0, 1.0);
        Ok(slot.get_or_init(|| FrameEmbedding { e_d, e_v, alignment }))
    }

    /// Alignment of every frame (fills the cache).
    pub fn alignments(&self) -> Result<Vec<f64>> {
        (1..=self.frames.len()).map(|f| self.frame(f).map(|e| e.alignment)).collect()
    }
}

/// Anything that maps a state to a distribution over the three actions.
pub trait Policy {
    fn config(&self) -> &AgentConfig;
    fn distribution(&self, state: &[f64]) -> Result<Vec<f64>>;
}

impl Policy for Agent {
    fn config(&self) -> &AgentConfig {
        &self.config
    }

    fn distribution(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.policy_probs(state)
    }
}

/// Always takes the same action.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    pub config: AgentConfig,
    pub action: Action,
}

impl Policy for ConstantPolicy {
    fn config(&self) -> &AgentConfig {
        &self.config
    }

    fn distribution(&self, _state: &[f64]) -> Result<Vec<f64>> {
        let mut d = vec![0.0; 3];
        d[self.action.index()] = 1.0;
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutConfig {
    pub target: usize,
    pub mode: SelectMode,
    pub sigma: f64,
    /// Terminal weight; `None` uses `F / S*`.
    pub lambda: Option<f64>,
}

impl RolloutConfig {
    pub fn greedy(target: usize) -> Self {
        Self {
            target,
            mode: SelectMode::Greedy,
            sigma: 0.5,
            lambda: None,
        }
    }

    pub fn sample(target: usize) -> Self {
        Self {
            mode: SelectMode::Sample,
            ..Self::greedy(target)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub video_id: String,
    pub num_frames: usize,
    pub target: usize,
    pub lambda: f64,
    pub selected_frames: Vec<usize>,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub distributions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub alignments: Vec<f64>,
    /// Skip applied after each step (the last one leaves the video).
    pub skips: Vec<usize>,
    /// Achieved speed-up `F / T`.
    pub terminal_speedup: f64,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.selected_frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected_frames.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Sum of per-step entropies in nats.
    pub fn total_entropy(&self) -> f64 {
        self.distributions.iter().map(|d| entropy(d)).sum()
    }
}

pub fn entropy(dist: &[f64]) -> f64 {
    -dist.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Average skip after `t` selected frames ending at frame `f`:
/// `(f - 1) / (t - 1)`, or `initial` before the first jump.
pub fn average_skip(f: usize, t: usize, initial: usize) -> f64 {
    if t <= 1 {
        initial as f64
    } else {
        (f - 1) as f64 / (t - 1) as f64
    }
}

/// Runs one episode from frame 1.
pub fn rollout<P: Policy + ?Sized, R: Rng + ?Sized>(
    embeddings: &VideoEmbeddings<'_>,
    policy: &P,
    config: &RolloutConfig,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    let ac = policy.config();
    let layout = ac.layout();
    if embeddings.embed_dim() != ac.embed_dim {
        return Err(Error::dim("agent embedding size", ac.embed_dim, embeddings.embed_dim()));
    }
    let video = embeddings.video;
    let n = video.num_frames();
    let target = config.target;
    if target == 0 || target > ac.nu_max {
        return Err(Error::InvalidArgument(format!("target speed-up {target} outside [1, {}]", ac.nu_max)));
    }
    let mut kin = Kinematics::initial(target, ac.nu_max, ac.omega_max)?;
    let initial_skip = kin.nu;
    let lambda = config.lambda.unwrap_or(n as f64 / target as f64);

    let mut trace = EpisodeTrace {
        video_id: video.id.clone(),
        num_frames: n,
        target,
        lambda,
        selected_frames: Vec::new(),
        states: Vec::new(),
        actions: Vec::new(),
        distributions: Vec::new(),
        log_probs: Vec::new(),
        rewards: Vec::new(),
        alignments: Vec::new(),
        skips: Vec::new(),
        terminal_speedup: 0.0,
    };
    let mut f = 1;
    loop {
        trace.selected_frames.push(f);
        let t = trace.selected_frames.len();
        let emb = embeddings.frame(f)?;
        let e_p = nrpe(f, n, ac.position_dim)?;
        let e_s = skip_encoding(average_skip(f, t, initial_skip), target, ac.nu_max)?;
        let state = layout.compose(&emb.e_d, &emb.e_v, &e_p, &e_s)?.values;
        let dist = policy.distribution(&state)?;
        let action = select_action(&dist, config.mode, rng)?;
        kin = kin.apply(action);
        let next = f + kin.nu;
        let terminal = next > n;
        let achieved = n as f64 / t as f64;
        let r = reward(emb.alignment, terminal, achieved, target as f64, lambda, config.sigma)?;

        trace.log_probs.push(dist[action.index()].ln());
        trace.states.push(state);
        trace.actions.push(action);
        trace.distributions.push(dist);
        trace.rewards.push(r);
        trace.alignments.push(emb.alignment);
        trace.skips.push(kin.nu);
        if terminal {
            trace.terminal_speedup = achieved;
            return Ok(trace);
        }
        f = next;
    }
}
