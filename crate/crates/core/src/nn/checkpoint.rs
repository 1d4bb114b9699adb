//! Parameter checkpoints: a JSON manifest naming every tensor and its
//! shape, plus a flat little-endian `f32` blob holding the tensors in
//! manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::Parameters;
use super::Matrix;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "semff-checkpoint";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    blob: String,
    #[serde(default)]
    header: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

/// Blob path that belongs to a manifest path (`x.json` -> `x.bin`).
pub fn blob_path_for(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

impl Checkpoint {
    /// Captures every tensor (trainable and buffers) of `params`.
    pub fn from_params<P: Parameters>(header: serde_json::Value, params: &P) -> Self {
        let mut tensors = Vec::new();
        params.visit("", &mut |name, m, _| {
            tensors.push(NamedTensor {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
                data: m.as_slice().iter().map(|&v| v as f32).collect(),
            });
        });
        Self { header, tensors }
    }

    pub fn save(&self, manifest_path: &Path) -> Result<()> {
        let blob_path = blob_path_for(manifest_path);
        let blob_name = blob_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let manifest = Manifest {
            format: CHECKPOINT_FORMAT.to_string(),
            version: 1,
            blob: blob_name,
            header: self.header.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorEntry {
                    name: t.name.clone(),
                    shape: [t.rows, t.cols],
                })
                .collect(),
        };
        let mut bytes = Vec::with_capacity(self.tensors.iter().map(|t| t.data.len() * 4).sum());
        for t in &self.tensors {
            for v in &t.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        if let Some(dir) = manifest_path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(manifest_path, json).map_err(|e| Error::io(manifest_path, e))?;
        fs::write(&blob_path, bytes).map_err(|e| Error::io(&blob_path, e))?;
        Ok(())
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: manifest_path.to_path_buf(),
            msg: e.to_string(),
        })?;
        if manifest.format != CHECKPOINT_FORMAT {
            return Err(Error::Schema {
                path: manifest_path.to_path_buf(),
                msg: format!("unknown format `{}`", manifest.format),
            });
        }
        let blob_path = manifest_path
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join(&manifest.blob);
        if !blob_path.exists() {
            return Err(Error::MissingBlob(blob_path));
        }
        let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        let expected: usize = manifest.tensors.iter().map(|t| t.shape[0] * t.shape[1] * 4).sum();
        if bytes.len() != expected {
            return Err(Error::Shape {
                path: blob_path,
                msg: format!("blob has {} bytes, manifest implies {expected}", bytes.len()),
            });
        }
        let mut offset = 0;
        let tensors = manifest
            .tensors
            .iter()
            .map(|t| {
                let n = t.shape[0] * t.shape[1];
                let data = bytes[offset..offset + 4 * n]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                offset += 4 * n;
                NamedTensor {
                    name: t.name.clone(),
                    rows: t.shape[0],
                    cols: t.shape[1],
                    data,
                }
            })
            .collect();
        Ok(Self {
            header: manifest.header,
            tensors,
        })
    }

    /// Copies tensors into `params` by name. Every tensor of `params` must
    /// be present with a matching shape.
    pub fn restore_into<P: Parameters>(&self, params: &mut P) -> Result<()> {
        let mut err = None;
        params.visit_mut("", &mut |name, m, _| {
            if err.is_some() {
                return;
            }
            match self.tensors.iter().find(|t| t.name == name) {
                None => err = Some(Error::Validation(format!("checkpoint lacks tensor `{name}`"))),
                Some(t) if (t.rows, t.cols) != m.shape() => {
                    err = Some(Error::Validation(format!(
                        "tensor `{name}` has shape {}x{}, model expects {}x{}",
                        t.rows,
                        t.cols,
                        m.rows(),
                        m.cols()
                    )))
                }
                Some(t) => {
                    for (dst, src) in m.as_mut_slice().iter_mut().zip(&t.data) {
                        *dst = *src as f64;
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn tensor(&self, name: &str) -> Option<Matrix> {
        self.tensors.iter().find(|t| t.name == name).map(|t| {
            Matrix::from_vec(t.rows, t.cols, t.data.iter().map(|&v| v as f64).collect())
                .expect("shape consistent")
        })
    }
}

/// Rounds every tensor to the nearest `f32`, so the in-memory model equals
/// what a checkpoint round trip would produce.
pub fn quantize_to_f32<P: Parameters>(params: &mut P) {
    params.visit_mut("", &mut |_, m, _| {
        m.as_mut_slice().iter_mut().for_each(|v| *v = *v as f32 as f64);
    });
}
