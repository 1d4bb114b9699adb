//! Videos, clip features and the dataset manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{axpy, Matrix};
use crate::vdan::{read_blob, write_blob, Document, MAX_SENTENCE_WORDS};

/// Clip window length used when pooling per-frame features.
pub const CLIP_WINDOW: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum ClipSource {
    /// Row `f - 1` is the clip feature at frame `f`.
    Precomputed(Matrix),
    /// Per-frame features; the clip at `f` is the mean over
    /// `[f, min(f + window - 1, F)]`.
    WindowPooled { frames: Matrix, window: usize },
}

impl ClipSource {
    pub fn num_frames(&self) -> usize {
        match self {
            ClipSource::Precomputed(m) => m.rows(),
            ClipSource::WindowPooled { frames, .. } => frames.rows(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            ClipSource::Precomputed(m) => m.cols(),
            ClipSource::WindowPooled { frames, .. } => frames.cols(),
        }
    }

    fn matrix(&self) -> &Matrix {
        match self {
            ClipSource::Precomputed(m) => m,
            ClipSource::WindowPooled { frames, .. } => frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoSpec {
    pub id: String,
    pub source: ClipSource,
    /// Sorted, disjoint, 1-based inclusive ranges; may be empty.
    pub segments: Vec<(usize, usize)>,
    pub document: Document,
}

pub fn validate_segments(segments: &[(usize, usize)], num_frames: usize) -> Result<()> {
    for &(s, e) in segments {
        if s == 0 || s > e || e > num_frames {
            return Err(Error::Validation(format!(
                "segment [{s}, {e}] is not a valid range inside [1, {num_frames}]"
            )));
        }
    }
    for w in segments.windows(2) {
        if w[1].0 <= w[0].1 {
            return Err(Error::Validation(format!(
                "segments [{}, {}] and [{}, {}] overlap or are unsorted",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    Ok(())
}

impl VideoSpec {
    pub fn new(id: String, source: ClipSource, segments: Vec<(usize, usize)>, document: Document) -> Result<Self> {
        let f = source.num_frames();
        if f == 0 {
            return Err(Error::Empty("video frames"));
        }
        if let ClipSource::WindowPooled { window: 0, .. } = source {
            return Err(Error::Validation("pooling window must be positive".into()));
        }
        validate_segments(&segments, f)?;
        Ok(Self {
            id,
            source,
            segments,
            document,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.source.num_frames()
    }

    pub fn feature_dim(&self) -> usize {
        self.source.feature_dim()
    }

    /// Clip features `phi` at 1-based frame `f`.
    pub fn clip_at(&self, f: usize) -> Result<Vec<f64>> {
        let n = self.num_frames();
        if f == 0 || f > n {
            return Err(Error::InvalidArgument(format!("frame {f} outside [1, {n}]")));
        }
        match &self.source {
            ClipSource::Precomputed(m) => Ok(m.row(f - 1).to_vec()),
            ClipSource::WindowPooled { frames, window } => {
                let end = (f + window - 1).min(n);
                let count = (end - f + 1) as f64;
                let mut acc = vec![0.0; frames.cols()];
                for r in f - 1..end {
                    axpy(1.0 / count, frames.row(r), &mut acc);
                }
                Ok(acc)
            }
        }
    }

    pub fn is_relevant(&self, f: usize) -> bool {
        crate::eval::in_segments(f, &self.segments)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Precomputed,
    Window,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VideoEntry {
    id: String,
    num_frames: usize,
    features: PathBuf,
    shape: [usize; 2],
    pooling: Pooling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    document: Vec<String>,
    #[serde(default)]
    segments: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    videos: Vec<VideoEntry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub videos: Vec<VideoSpec>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&VideoSpec> {
        self.videos.iter().find(|v| v.id == id)
    }

    /// Writes the manifest and one `<id>.f32` blob per video next to it.
    pub fn save(&self, manifest: &Path) -> Result<()> {
        let dir = manifest.parent().unwrap_or_else(|| Path::new(""));
        let mut entries = Vec::with_capacity(self.videos.len());
        for v in &self.videos {
            let blob = PathBuf::from(format!("{}.f32", v.id));
            write_blob(&dir.join(&blob), v.source.matrix())?;
            let (pooling, window) = match &v.source {
                ClipSource::Precomputed(_) => (Pooling::Precomputed, None),
                ClipSource::WindowPooled { window, .. } => (Pooling::Window, Some(*window)),
            };
            entries.push(VideoEntry {
                id: v.id.clone(),
                num_frames: v.num_frames(),
                features: blob,
                shape: [v.num_frames(), v.feature_dim()],
                pooling,
                window,
                document: v.document.to_strings(),
                segments: v.segments.iter().map(|&(s, e)| [s, e]).collect(),
            });
        }
        let json = serde_json::to_string_pretty(&Manifest { videos: entries }).expect("manifest serializes");
        fs::write(manifest, json).map_err(|e| Error::io(manifest, e))
    }

    pub fn load(manifest: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: manifest.to_path_buf(),
            msg: e.to_string(),
        })?;
        let dir = manifest.parent().unwrap_or_else(|| Path::new(""));
        let mut videos = Vec::with_capacity(m.videos.len());
        let mut ids = std::collections::HashSet::new();
        for e in m.videos {
            if !ids.insert(e.id.clone()) {
                return Err(Error::Validation(format!("duplicate video id `{}`", e.id)));
            }
            let segments: Vec<(usize, usize)> = e.segments.iter().map(|s| (s[0], s[1])).collect();
            validate_segments(&segments, e.num_frames)
                .map_err(|err| Error::Validation(format!("video `{}`: {err}", e.id)))?;
            let path = dir.join(&e.features);
            let features = read_blob(&path)?;
            if features.shape() != (e.shape[0], e.shape[1]) || e.shape[0] != e.num_frames {
                return Err(Error::Shape {
                    path,
                    msg: format!(
                        "blob is {}x{}, manifest says {}x{} with {} frames",
                        features.rows(),
                        features.cols(),
                        e.shape[0],
                        e.shape[1],
                        e.num_frames
                    ),
                });
            }
            let source = match e.pooling {
                Pooling::Precomputed => ClipSource::Precomputed(features),
                Pooling::Window => ClipSource::WindowPooled {
                    frames: features,
                    window: e.window.unwrap_or(CLIP_WINDOW),
                },
            };
            let document = Document::from_sentences(&e.document, MAX_SENTENCE_WORDS).map_err(|err| Error::Schema {
                path: manifest.to_path_buf(),
                msg: format!("video `{}`: {err}", e.id),
            })?;
            videos.push(VideoSpec::new(e.id, source, segments, document)?);
        }
        Ok(Self { videos })
    }
}
