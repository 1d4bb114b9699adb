//! Tokenization, documents and the word-vector table.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::params::join;
use crate::nn::{Matrix, Parameters, TensorRole};

pub const OOV_TOKEN: &str = "<unk>";
pub const MAX_SENTENCE_WORDS: usize = 20;

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '_'))
        .map(|t| t.trim_matches('\'').to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// An ordered list of tokenized sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    sentences: Vec<Vec<String>>,
}

impl Document {
    /// Tokenizes each sentence and keeps its first `max_words` tokens.
    /// Sentences that tokenize to nothing are dropped.
    pub fn from_sentences<S: AsRef<str>>(sentences: &[S], max_words: usize) -> Result<Self> {
        let sentences: Vec<Vec<String>> = sentences
            .iter()
            .map(|s| {
                let mut t = tokenize(s.as_ref());
                t.truncate(max_words);
                t
            })
            .filter(|t| !t.is_empty())
            .collect();
        Self::from_tokens(sentences)
    }

    pub fn from_tokens(sentences: Vec<Vec<String>>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::Empty("document"));
        }
        if sentences.iter().any(|s| s.is_empty()) {
            return Err(Error::Empty("sentence"));
        }
        Ok(Self { sentences })
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentences re-joined with single spaces.
    pub fn to_strings(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.join(" ")).collect()
    }
}

/// Token index plus the word-vector table. Row 0 is the out-of-vocabulary
/// row.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    pub embeddings: Matrix,
    /// Frozen vectors are checkpointed but not optimized.
    pub frozen: bool,
}

impl Vocabulary {
    /// Random trainable vectors for `tokens` (duplicates ignored).
    pub fn new<R: Rng + ?Sized>(tokens: impl IntoIterator<Item = String>, dim: usize, rng: &mut R) -> Self {
        let mut list = vec![OOV_TOKEN.to_string()];
        let mut index = HashMap::new();
        index.insert(OOV_TOKEN.to_string(), 0);
        for t in tokens {
            if !index.contains_key(&t) {
                index.insert(t.clone(), list.len());
                list.push(t);
            }
        }
        let bound = (3.0 / dim.max(1) as f64).sqrt();
        let embeddings = Matrix::uniform(list.len(), dim, bound, rng);
        Self {
            tokens: list,
            index,
            embeddings,
            frozen: false,
        }
    }

    /// Builds from an explicit token list (row 0 must be the OOV token) and
    /// table; used when restoring checkpoints.
    pub fn from_parts(tokens: Vec<String>, embeddings: Matrix, frozen: bool) -> Result<Self> {
        if tokens.first().map(String::as_str) != Some(OOV_TOKEN) {
            return Err(Error::Validation("vocabulary must start with the OOV token".into()));
        }
        if tokens.len() != embeddings.rows() {
            return Err(Error::dim("vocabulary rows", tokens.len(), embeddings.rows()));
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self {
            tokens,
            index,
            embeddings,
            frozen,
        })
    }

    /// Reads the whitespace-separated text format (`token v1 v2 ...` per
    /// line). The loaded vectors are frozen; the OOV row is zero.
    pub fn load_text_vectors(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut tokens = vec![OOV_TOKEN.to_string()];
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(tok) = parts.next() else { continue };
            let vals: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                msg: format!("line {}: {e}", lineno + 1),
            })?;
            match dim {
                None => dim = Some(vals.len()),
                Some(d) if d != vals.len() => {
                    return Err(Error::Shape {
                        path: path.to_path_buf(),
                        msg: format!("line {} has {} values, expected {d}", lineno + 1, vals.len()),
                    })
                }
                _ => {}
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("word vector on line {}", lineno + 1)));
            }
            tokens.push(tok.to_lowercase());
            rows.push(vals);
        }
        let dim = dim.ok_or(Error::Empty("word vector file"))?;
        let mut data = vec![0.0; dim];
        for r in rows {
            data.extend(r);
        }
        let emb = Matrix::from_vec(tokens.len(), dim, data)?;
        Self::from_parts(tokens, emb, true)
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Index of `token`, or the OOV row.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        self.embeddings.row(index)
    }
}

impl Parameters for Vocabulary {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        let role = if self.frozen {
            TensorRole::Buffer
        } else {
            TensorRole::Trainable
        };
        f(&join(prefix, "embeddings"), &self.embeddings, role);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        let role = if self.frozen {
            TensorRole::Buffer
        } else {
            TensorRole::Trainable
        };
        f(&join(prefix, "embeddings"), &mut self.embeddings, role);
    }
}
