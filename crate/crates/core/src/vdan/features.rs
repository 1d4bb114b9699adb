//! Clip features and the feature blob format: little-endian `f32`,
//! row-major, with a JSON sidecar `{rows, cols}` at `<blob>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Synthetic,
    File,
}

/// Feature vector `phi(v)` of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeatures {
    pub values: Vec<f64>,
    pub source: FeatureSource,
}

impl ClipFeatures {
    pub fn new(values: Vec<f64>, source: FeatureSource) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("clip features"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("clip features".into()));
        }
        Ok(Self { values, source })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobShape {
    pub rows: usize,
    pub cols: usize,
}

pub fn sidecar_path(blob: &Path) -> PathBuf {
    let mut s = blob.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `m` (rounded to `f32`) and its sidecar.
pub fn write_blob(path: &Path, m: &Matrix) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut bytes = Vec::with_capacity(m.len() * 4);
    for &v in m.as_slice() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let shape = BlobShape {
        rows: m.rows(),
        cols: m.cols(),
    };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_string(&shape).expect("shape serializes")).map_err(|e| Error::io(&side, e))
}

pub fn read_blob_shape(path: &Path) -> Result<BlobShape> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Err(Error::MissingBlob(side));
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: side,
        msg: e.to_string(),
    })
}

pub fn read_blob(path: &Path) -> Result<Matrix> {
    if !path.exists() {
        return Err(Error::MissingBlob(path.to_path_buf()));
    }
    let shape = read_blob_shape(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != shape.rows * shape.cols * 4 {
        return Err(Error::Shape {
            path: path.to_path_buf(),
            msg: format!(
                "blob has {} bytes, sidecar says {}x{} floats",
                bytes.len(),
                shape.rows,
                shape.cols
            ),
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("feature blob {}", path.display())));
    }
    Matrix::from_vec(shape.rows, shape.cols, data)
}
