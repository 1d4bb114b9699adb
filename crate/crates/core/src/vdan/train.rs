//! Encoder training loop.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::Vdan;
use super::loss::Label;
use super::pairs::{build_pair, Corpus, TrainingPair};
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::nn::{quantize_to_f32, Adam, AdamConfig, NormMode, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of clips held out for model selection.
    pub validation_fraction: f64,
    /// Hinge margin of the negative-pair loss.
    pub margin: f64,
    /// Pairs (half positive, half negative) drawn per training clip per
    /// epoch.
    pub pairs_per_clip: usize,
    /// Stop once `min_epochs` have run and validation AUC reaches this
    /// value. `None` always runs every epoch.
    pub target_auc: Option<f64>,
    pub min_epochs: usize,
    pub seed: u64,
}

impl Default for EncoderTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            validation_fraction: 0.1,
            margin: 0.0,
            pairs_per_clip: 2,
            target_auc: None,
            min_epochs: 1,
            seed: 0,
        }
    }
}

impl EncoderTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must be in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.margin) {
            return Err(Error::Config("margin must be in [0, 1)".into()));
        }
        if self.pairs_per_clip == 0 {
            return Err(Error::Config("pairs_per_clip must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: f64,
    /// Mean cosine of positive minus negative validation pairs.
    pub val_cosine_gap: f64,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    /// Best-validation parameters, rounded to checkpoint precision.
    pub model: Vdan,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub log: Vec<EpochRecord>,
    pub validation_pairs: Vec<TrainingPair>,
}

/// Deterministic clip split: `(train, validation)` index lists.
pub fn split_clips(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5911));
    let n_val = ((n as f64) * fraction).round() as usize;
    let val = idx[..n_val].to_vec();
    let train = idx[n_val..].to_vec();
    (train, val)
}

/// One positive and one negative pair for each clip in `clips`, in that
/// order, repeated `per_clip / 2` times (at least once).
pub fn make_pairs(
    corpus: &Corpus,
    clips: &[usize],
    pool: &[usize],
    per_clip: usize,
    max_words: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainingPair>> {
    let mut out = Vec::with_capacity(clips.len() * per_clip);
    for &c in clips {
        for k in 0..per_clip.max(1) {
            let label = if k % 2 == 0 { Label::Positive } else { Label::Negative };
            out.push(build_pair(corpus, pool, c, label, max_words, rng)?);
        }
    }
    Ok(out)
}

/// Trains `model` on `corpus`, keeping the parameters with the lowest
/// validation loss. `on_epoch` sees each record as it is produced.
pub fn train_encoder(
    mut model: Vdan,
    corpus: &Corpus,
    config: &EncoderTrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainedEncoder> {
    config.validate()?;
    if corpus.len() < 3 {
        return Err(Error::CorpusTooSmall {
            needed: 3,
            have: corpus.len(),
        });
    }
    if let Some(z) = corpus.feature_dim() {
        if z != model.feature_dim() {
            return Err(Error::dim("corpus clip features", model.feature_dim(), z));
        }
    }
    let max_words = model.config.max_sentence_words;
    let (train, val) = split_clips(corpus.len(), config.validation_fraction, config.seed);
    if train.len() < 3 {
        return Err(Error::CorpusTooSmall {
            needed: 3,
            have: train.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let validation_pairs = if val.len() >= 3 {
        make_pairs(corpus, &val, &val, 2, max_words, &mut rng)?
    } else {
        Vec::new()
    };

    let mut adam = Adam::new(AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    });
    let start = Instant::now();
    let mut best: Option<(f64, usize, Vdan)> = None;
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut pairs = make_pairs(corpus, &train, &train, config.pairs_per_clip, max_words, &mut rng)?;
        pairs.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in pairs.chunks(config.batch_size) {
            if batch.len() < 2 {
                continue;
            }
            let out = model.batch_objective(batch, config.margin, NormMode::Train)?;
            if !out.loss.is_finite() {
                return Err(Error::NonFinite(format!("encoder loss at epoch {epoch}")));
            }
            adam.step(&mut model, &out.grads)?;
            model.update_norm_stats(&out);
            if !model.all_finite() {
                return Err(Error::NonFinite(format!("encoder parameters at epoch {epoch}")));
            }
            loss_sum += out.loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches.max(1) as f64;

        let (val_loss, val_auc, gap) = if validation_pairs.is_empty() {
            (train_loss, f64::NAN, f64::NAN)
        } else {
            let (loss, cos) = model.evaluate(&validation_pairs, config.margin)?;
            let labels = Vdan::labels(&validation_pairs);
            (loss, roc_auc(&cos, &labels)?, cosine_gap(&cos, &labels))
        };
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_auc,
            val_cosine_gap: gap,
            wall_time_ms: start.elapsed().as_millis(),
        };
        log::info!(
            "encoder epoch {epoch}: train {train_loss:.4} val {val_loss:.4} auc {val_auc:.4}"
        );
        on_epoch(&record);
        log.push(record);
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, model.clone()));
        }
        if let Some(t) = config.target_auc {
            if epoch >= config.min_epochs && val_auc >= t {
                break;
            }
        }
    }

    let (_, best_epoch, mut model) = best.expect("at least one epoch ran");
    quantize_to_f32(&mut model);
    let best_val_loss = if validation_pairs.is_empty() {
        log[best_epoch - 1].val_loss
    } else {
        model.evaluate(&validation_pairs, config.margin)?.0
    };
    Ok(TrainedEncoder {
        model,
        best_epoch,
        best_val_loss,
        log,
        validation_pairs,
    })
}

fn cosine_gap(cos: &[f64], labels: &[bool]) -> f64 {
    let mean = |want: bool| {
        let v: Vec<f64> = cos
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == want)
            .map(|(c, _)| *c)
            .collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    mean(true) - mean(false)
}
