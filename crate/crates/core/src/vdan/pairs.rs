//! Caption corpus and positive/negative training pairs.
//!
//! A positive document holds the captions of the target clip plus those of
//! one other random clip; a negative document holds only the captions of
//! two other random clips. Sentences are shuffled every time a pair is
//! built.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{read_blob, ClipFeatures, FeatureSource};
use super::loss::Label;
use super::text::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusClip {
    pub id: String,
    pub features: ClipFeatures,
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub clips: Vec<CorpusClip>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum FeatureRef {
    Inline(Vec<f64>),
    Path(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusEntry {
    clip_id: String,
    features: FeatureRef,
    captions: Vec<String>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.clips.first().map(|c| c.features.dim())
    }

    /// Every token appearing in any caption.
    pub fn tokens(&self) -> Vec<String> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.clips {
            for cap in &c.captions {
                seen.extend(super::text::tokenize(cap));
            }
        }
        seen.into_iter().collect()
    }

    /// Reads a corpus file: a JSON list of `{clip_id, features, captions}`
    /// where `features` is an inline array or a path (relative to the
    /// corpus file) to a single-row feature blob.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<CorpusEntry> = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let mut clips = Vec::with_capacity(entries.len());
        let mut dim = None;
        for e in entries {
            let features = match e.features {
                FeatureRef::Inline(v) => ClipFeatures::new(v, FeatureSource::Synthetic)?,
                FeatureRef::Path(p) => {
                    let m = read_blob(&base.join(&p))?;
                    if m.rows() != 1 {
                        return Err(Error::Shape {
                            path: base.join(&p),
                            msg: format!("clip blob must have one row, has {}", m.rows()),
                        });
                    }
                    ClipFeatures::new(m.as_slice().to_vec(), FeatureSource::File)?
                }
            };
            match dim {
                None => dim = Some(features.dim()),
                Some(d) if d != features.dim() => {
                    return Err(Error::Shape {
                        path: path.to_path_buf(),
                        msg: format!("clip `{}` has {} features, expected {d}", e.clip_id, features.dim()),
                    })
                }
                _ => {}
            }
            if e.captions.is_empty() {
                return Err(Error::Schema {
                    path: path.to_path_buf(),
                    msg: format!("clip `{}` has no captions", e.clip_id),
                });
            }
            clips.push(CorpusClip {
                id: e.clip_id,
                features,
                captions: e.captions,
            });
        }
        Ok(Self { clips })
    }

    /// Writes the corpus with inline features.
    pub fn save(&self, path: &Path) -> Result<()> {
        let entries: Vec<CorpusEntry> = self
            .clips
            .iter()
            .map(|c| CorpusEntry {
                clip_id: c.id.clone(),
                features: FeatureRef::Inline(c.features.values.iter().map(|&v| v as f32 as f64).collect()),
                captions: c.captions.clone(),
            })
            .collect();
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let json = serde_json::to_string(&entries).expect("corpus serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub document: Document,
    pub clip: ClipFeatures,
    pub label: Label,
    /// Index of the target clip.
    pub target: usize,
    /// Indices of the clips whose captions form the document, in the order
    /// they were drawn (target first for positive pairs).
    pub caption_sources: Vec<usize>,
}

/// Builds a pair for `target`, drawing distractor clips from `pool`
/// (which may include `target`; it is never drawn as a distractor).
pub fn build_pair<R: Rng + ?Sized>(
    corpus: &Corpus,
    pool: &[usize],
    target: usize,
    label: Label,
    max_words: usize,
    rng: &mut R,
) -> Result<TrainingPair> {
    let others: Vec<usize> = pool.iter().copied().filter(|&i| i != target).collect();
    let distinct = others.len() + 1;
    if distinct < 3 || target >= corpus.len() {
        return Err(Error::CorpusTooSmall {
            needed: 3,
            have: distinct,
        });
    }
    let sources: Vec<usize> = match label {
        Label::Positive => {
            let other = *others.choose(rng).expect("non-empty");
            vec![target, other]
        }
        Label::Negative => others.choose_multiple(rng, 2).copied().collect(),
    };
    let mut sentences: Vec<&str> = sources
        .iter()
        .flat_map(|&i| corpus.clips[i].captions.iter().map(String::as_str))
        .collect();
    sentences.shuffle(rng);
    Ok(TrainingPair {
        document: Document::from_sentences(&sentences, max_words)?,
        clip: corpus.clips[target].features.clone(),
        label,
        target,
        caption_sources: sources,
    })
}
