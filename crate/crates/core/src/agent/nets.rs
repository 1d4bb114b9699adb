//! Policy and value networks.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::{Action, NU_MAX, OMEGA_MAX};
use super::state::StateLayout;
use crate::error::{Error, Result};
use crate::nn::params::join;
use crate::nn::{softmax, Activation, Checkpoint, Matrix, Mlp, MlpCache, Parameters, TensorRole};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    /// Joint embedding size `d`.
    pub embed_dim: usize,
    /// Positional encoding size `q`.
    pub position_dim: usize,
    pub nu_max: usize,
    pub omega_max: usize,
    pub hidden: Vec<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            embed_dim: 128,
            position_dim: 128,
            nu_max: NU_MAX,
            omega_max: OMEGA_MAX,
            hidden: vec![256, 128],
        }
    }
}

impl AgentConfig {
    pub fn layout(&self) -> StateLayout {
        StateLayout {
            embed_dim: self.embed_dim,
            position_dim: self.position_dim,
            skip_dim: 2 * self.nu_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.nu_max == 0 || self.omega_max == 0 {
            return Err(Error::Config("agent dimensions and limits must be positive".into()));
        }
        if self.position_dim == 0 || self.position_dim % 2 != 0 {
            return Err(Error::Config("position_dim must be even and positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    Greedy,
    Sample,
}

/// Argmax (lowest index on ties) or a draw from `dist`.
pub fn select_action<R: Rng + ?Sized>(dist: &[f64], mode: SelectMode, rng: &mut R) -> Result<Action> {
    if dist.len() != 3 {
        return Err(Error::dim("action distribution", 3, dist.len()));
    }
    let i = match mode {
        SelectMode::Greedy => {
            let mut best = 0;
            for (i, &p) in dist.iter().enumerate() {
                if p > dist[best] {
                    best = i;
                }
            }
            best
        }
        SelectMode::Sample => {
            let u: f64 = rng.random::<f64>() * dist.iter().sum::<f64>();
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &p) in dist.iter().enumerate() {
                acc += p;
                if p > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| dist.iter().rposition(|&p| p > 0.0).unwrap_or(0))
        }
    };
    Action::from_index(i)
}

/// Policy network (logits, softmaxed on use) and value network.
#[derive(Debug, Clone)]
pub struct Agent {
    pub config: AgentConfig,
    pub policy: Mlp,
    pub value: Mlp,
}

impl Agent {
    /// Random hidden layers; the output layers start at zero so the initial
    /// policy is uniform and the initial value is 0.
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let input = config.layout().len();
        let sizes = |out: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden);
            s.push(out);
            s
        };
        let mut policy = Mlp::new("policy", &sizes(3), Activation::Relu, Activation::Linear, rng);
        let mut value = Mlp::new("value", &sizes(1), Activation::Relu, Activation::Linear, rng);
        policy.layers.last_mut().expect("output layer").zero();
        value.layers.last_mut().expect("output layer").zero();
        Ok(Self { config, policy, value })
    }

    pub fn state_len(&self) -> usize {
        self.config.layout().len()
    }

    pub fn policy_forward(&self, state: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        let (logits, cache) = self.policy.forward(state)?;
        Ok((softmax(&logits), cache))
    }

    pub fn policy_probs(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.policy.apply(state)?))
    }

    pub fn value_forward(&self, state: &[f64]) -> Result<(f64, MlpCache)> {
        let (v, cache) = self.value.forward(state)?;
        Ok((v[0], cache))
    }

    pub fn state_value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.value.apply(state)?[0])
    }

    pub fn checkpoint_header(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "agent",
            "d": self.config.embed_dim,
            "q": self.config.position_dim,
            "m": 2 * self.config.nu_max,
            "nu_max": self.config.nu_max,
            "omega_max": self.config.omega_max,
            "hidden": self.config.hidden,
        })
    }

    pub fn save(&self, manifest: &Path) -> Result<()> {
        Checkpoint::from_params(self.checkpoint_header(), self).save(manifest)
    }

    pub fn load(manifest: &Path) -> Result<Self> {
        let ck = Checkpoint::load(manifest)?;
        let h = &ck.header;
        let bad = |msg: String| Error::Schema {
            path: manifest.to_path_buf(),
            msg,
        };
        if h["kind"] != "agent" {
            return Err(bad("not an agent checkpoint".into()));
        }
        let field = |k: &str| {
            h[k].as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| bad(format!("header field `{k}` missing")))
        };
        let config = AgentConfig {
            embed_dim: field("d")?,
            position_dim: field("q")?,
            nu_max: field("nu_max")?,
            omega_max: field("omega_max")?,
            hidden: serde_json::from_value(h["hidden"].clone()).map_err(|e| bad(e.to_string()))?,
        };
        if field("m")? != 2 * config.nu_max {
            return Err(bad("skip encoding size must be 2 * nu_max".into()));
        }
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut agent = Agent::new(config, &mut rng)?;
        ck.restore_into(&mut agent)?;
        Ok(agent)
    }
}

impl Parameters for Agent {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        self.policy.visit(&join(prefix, "policy"), f);
        self.value.visit(&join(prefix, "value"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        self.policy.visit_mut(&join(prefix, "policy"), f);
        self.value.visit_mut(&join(prefix, "value"), f);
    }
}
