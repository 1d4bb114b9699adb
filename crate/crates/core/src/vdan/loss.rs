//! Cosine embedding loss and the alignment score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1` / `-1`.
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(y: i64) -> Result<Self> {
        match y {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            _ => Err(Error::InvalidArgument(format!("label must be +1 or -1, got {y}"))),
        }
    }
}

/// `1 - cos` for positive pairs, `max(0, cos - margin)` for negative ones.
pub fn cosine_embedding_loss(cos: f64, label: Label, margin: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidArgument(format!("margin must lie in [0, 1), got {margin}")));
    }
    Ok(match label {
        Label::Positive => 1.0 - cos,
        Label::Negative => (cos - margin).max(0.0),
    })
}

/// Derivative of [`cosine_embedding_loss`] with respect to `cos`.
pub fn cosine_embedding_loss_grad(cos: f64, label: Label, margin: f64) -> f64 {
    match label {
        Label::Positive => -1.0,
        Label::Negative if cos > margin => 1.0,
        Label::Negative => 0.0,
    }
}

/// Loss computed from the two unit-norm embeddings.
pub fn embedding_loss(e_doc: &[f64], e_clip: &[f64], label: Label, margin: f64) -> Result<f64> {
    cosine_embedding_loss(alignment(e_doc, e_clip), label, margin)
}

/// Dot product of two unit-norm embeddings.
pub fn alignment(e_doc: &[f64], e_clip: &[f64]) -> f64 {
    dot(e_doc, e_clip)
}
