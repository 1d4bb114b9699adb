//! Run configuration: every tunable of the pipeline in one JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::env::SyntheticConfig;
use crate::error::{Error, Result};
use crate::rl::AgentTrainConfig;
use crate::vdan::{EncoderConfig, EncoderTrainConfig};

/// Default artifact locations, relative to the working directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: PathBuf,
    pub train_dataset: PathBuf,
    pub test_dataset: PathBuf,
    pub encoder: PathBuf,
    pub agent: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "data/corpus.json".into(),
            train_dataset: "data/train/manifest.json".into(),
            test_dataset: "data/test/manifest.json".into(),
            encoder: "models/encoder.json".into(),
            agent: "models/agent.json".into(),
        }
    }
}

/// How many synthetic videos `synth` writes per split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSizes {
    pub train_videos: usize,
    pub test_videos: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train_videos: 40,
            test_videos: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub synthetic: SyntheticConfig,
    pub splits: SplitSizes,
    pub encoder: EncoderConfig,
    pub encoder_train: EncoderTrainConfig,
    pub agent: AgentConfig,
    pub agent_train: AgentTrainConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.synthetic.validate()?;
        self.encoder_train.validate()?;
        self.agent.validate()?;
        self.agent_train.validate()?;
        if self.encoder.feature_dim != self.synthetic.feature_dim {
            return Err(Error::Config(format!(
                "encoder feature_dim {} differs from synthetic feature_dim {}",
                self.encoder.feature_dim, self.synthetic.feature_dim
            )));
        }
        if self.encoder.embed_dim != self.agent.embed_dim {
            return Err(Error::Config(format!(
                "encoder embed_dim {} differs from agent embed_dim {}",
                self.encoder.embed_dim, self.agent.embed_dim
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
