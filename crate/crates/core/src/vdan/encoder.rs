//! Hierarchical attention document encoder conditioned on clip features,
//! and the clip projection head.
//!
//! Words are embedded, run through a bidirectional GRU and pooled with
//! word-level attention into one vector per sentence. Sentence vectors go
//! through a second bidirectional GRU whose initial state is the clip
//! feature vector, then sentence-level attention yields the document
//! vector. Both the document vector and the clip features are projected by
//! a one-hidden-layer network, batch normalized and L2 normalized.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{cosine_embedding_loss, cosine_embedding_loss_grad, Label};
use super::pairs::TrainingPair;
use super::text::{Document, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::params::join;
use crate::nn::{
    dot, l2_normalize, l2_normalize_backward, norm, Activation, AttentionCache, AttentionPool,
    BatchNorm, BiGru, BiGruCache, Matrix, Mlp, MlpCache, NormMode, Parameters,
    TensorRole,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    pub word_dim: usize,
    /// Per-direction hidden size of the sentence-level recurrence.
    pub sentence_hidden: usize,
    /// Clip feature size `z`.
    pub feature_dim: usize,
    /// Per-direction hidden size of the document-level recurrence. Must
    /// equal `feature_dim` because the clip features seed its state.
    pub document_hidden: usize,
    pub word_attention: usize,
    pub sentence_attention: usize,
    pub projection_hidden: usize,
    /// Joint embedding size `d`.
    pub embed_dim: usize,
    pub max_sentence_words: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            word_dim: 50,
            sentence_hidden: 32,
            feature_dim: 64,
            document_hidden: 64,
            word_attention: 64,
            sentence_attention: 64,
            projection_hidden: 128,
            embed_dim: 128,
            max_sentence_words: super::text::MAX_SENTENCE_WORDS,
        }
    }
}

impl EncoderConfig {
    /// Dimensions used at full scale (300-d word vectors, 512-d recurrent
    /// states and features, 1024-d attention contexts, 512-unit heads).
    pub fn full_scale() -> Self {
        Self {
            word_dim: 300,
            sentence_hidden: 512,
            feature_dim: 512,
            document_hidden: 512,
            word_attention: 1024,
            sentence_attention: 1024,
            projection_hidden: 512,
            embed_dim: 128,
            max_sentence_words: super::text::MAX_SENTENCE_WORDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.document_hidden != self.feature_dim {
            return Err(Error::Config(format!(
                "document-level hidden size {} must equal the clip feature size {}",
                self.document_hidden, self.feature_dim
            )));
        }
        let dims = [
            ("word_dim", self.word_dim),
            ("sentence_hidden", self.sentence_hidden),
            ("feature_dim", self.feature_dim),
            ("word_attention", self.word_attention),
            ("sentence_attention", self.sentence_attention),
            ("projection_hidden", self.projection_hidden),
            ("embed_dim", self.embed_dim),
            ("max_sentence_words", self.max_sentence_words),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Vdan {
    pub config: EncoderConfig,
    pub vocab: Vocabulary,
    pub sentence_rnn: BiGru,
    pub word_attention: AttentionPool,
    pub document_rnn: BiGru,
    pub sentence_attention: AttentionPool,
    pub doc_head: Mlp,
    pub doc_norm: BatchNorm,
    pub clip_head: Mlp,
    pub clip_norm: BatchNorm,
}

#[derive(Debug, Clone)]
struct SentenceCache {
    indices: Vec<usize>,
    rnn: BiGruCache,
    attn: AttentionCache,
}

#[derive(Debug, Clone)]
struct DocumentCache {
    sentences: Vec<SentenceCache>,
    rnn: BiGruCache,
    attn: AttentionCache,
    head: MlpCache,
}

/// Sentence vectors of a document; they do not depend on the clip, so a
/// context can be reused while the clip changes.
#[derive(Debug, Clone)]
pub struct DocumentContext {
    pub sentence_vectors: Vec<Vec<f64>>,
    pub word_weights: Vec<Vec<f64>>,
}

/// Output of a batched loss evaluation.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub loss: f64,
    pub grads: Vdan,
    pub cosines: Vec<f64>,
    pre_doc: Vec<Vec<f64>>,
    pre_clip: Vec<Vec<f64>>,
}

impl Vdan {
    pub fn new<R: Rng + ?Sized>(config: EncoderConfig, vocab: Vocabulary, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if vocab.dim() != config.word_dim {
            return Err(Error::Config(format!(
                "word vectors have {} dimensions, config expects {}",
                vocab.dim(),
                config.word_dim
            )));
        }
        let c = &config;
        let sentence_rnn = BiGru::new(c.word_dim, c.sentence_hidden, rng);
        let word_attention = AttentionPool::new(2 * c.sentence_hidden, c.word_attention, rng);
        let document_rnn = BiGru::new(2 * c.sentence_hidden, c.document_hidden, rng);
        let sentence_attention = AttentionPool::new(2 * c.document_hidden, c.sentence_attention, rng);
        let doc_head = Mlp::new(
            "doc_head",
            &[2 * c.document_hidden, c.projection_hidden, c.embed_dim],
            Activation::Relu,
            Activation::Linear,
            rng,
        );
        let clip_head = Mlp::new(
            "clip_head",
            &[c.feature_dim, c.projection_hidden, c.embed_dim],
            Activation::Relu,
            Activation::Linear,
            rng,
        );
        Ok(Self {
            doc_norm: BatchNorm::new(c.embed_dim),
            clip_norm: BatchNorm::new(c.embed_dim),
            config,
            vocab,
            sentence_rnn,
            word_attention,
            document_rnn,
            sentence_attention,
            doc_head,
            clip_head,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    fn check_features(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.config.feature_dim {
            return Err(Error::dim("clip features", self.config.feature_dim, phi.len()));
        }
        Ok(())
    }

    fn sentence_forward(&self, tokens: &[String]) -> Result<(Vec<f64>, Vec<f64>, SentenceCache)> {
        if tokens.is_empty() {
            return Err(Error::Empty("sentence"));
        }
        let indices: Vec<usize> = tokens.iter().map(|t| self.vocab.lookup(t)).collect();
        let words: Vec<Vec<f64>> = indices.iter().map(|&i| self.vocab.vector(i).to_vec()).collect();
        let h0 = vec![0.0; self.config.sentence_hidden];
        let (states, rnn) = self.sentence_rnn.forward(&words, &h0, &h0)?;
        let (p, w, attn) = self.word_attention.forward(&states)?;
        Ok((p, w.clone(), SentenceCache { indices, rnn, attn }))
    }

    /// Sentence vector `p_i` and its word attention weights.
    pub fn encode_sentence(&self, tokens: &[String]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (p, w, _) = self.sentence_forward(tokens)?;
        Ok((p, w))
    }

    pub fn document_context(&self, doc: &Document) -> Result<DocumentContext> {
        let mut sentence_vectors = Vec::with_capacity(doc.len());
        let mut word_weights = Vec::with_capacity(doc.len());
        for s in doc.sentences() {
            let (p, w) = self.encode_sentence(s)?;
            sentence_vectors.push(p);
            word_weights.push(w);
        }
        Ok(DocumentContext {
            sentence_vectors,
            word_weights,
        })
    }

    /// Document vector `d` conditioned on `phi`, with sentence weights.
    pub fn encode_document(&self, ctx: &DocumentContext, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_features(phi)?;
        let (states, _) = self.document_rnn.forward(&ctx.sentence_vectors, phi, phi)?;
        let (d, w, _) = self.sentence_attention.forward(&states)?;
        Ok((d, w))
    }

    /// `e_D` from a document vector (frozen normalization statistics).
    pub fn project_document(&self, d: &[f64]) -> Result<Vec<f64>> {
        let h = self.doc_head.apply(d)?;
        l2_normalize(&self.doc_norm.apply_inference(&h)?)
    }

    /// `e_v` from clip features (frozen normalization statistics).
    pub fn project_clip(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.check_features(phi)?;
        let h = self.clip_head.apply(phi)?;
        l2_normalize(&self.clip_norm.apply_inference(&h)?)
    }

    pub fn embed_document_with(&self, ctx: &DocumentContext, phi: &[f64]) -> Result<Vec<f64>> {
        let (d, _) = self.encode_document(ctx, phi)?;
        self.project_document(&d)
    }

    pub fn embed_document(&self, doc: &Document, phi: &[f64]) -> Result<Vec<f64>> {
        self.embed_document_with(&self.document_context(doc)?, phi)
    }

    /// `(e_D, e_v)` for one document/clip pair.
    pub fn embed_pair(&self, doc: &Document, phi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.embed_document(doc, phi)?, self.project_clip(phi)?))
    }

    fn document_forward(&self, doc: &Document, phi: &[f64]) -> Result<(Vec<f64>, DocumentCache)> {
        self.check_features(phi)?;
        let mut sentences = Vec::with_capacity(doc.len());
        let mut ps = Vec::with_capacity(doc.len());
        for s in doc.sentences() {
            let (p, _, c) = self.sentence_forward(s)?;
            ps.push(p);
            sentences.push(c);
        }
        let (states, rnn) = self.document_rnn.forward(&ps, phi, phi)?;
        let (d, _, attn) = self.sentence_attention.forward(&states)?;
        let (pre, head) = self.doc_head.forward(&d)?;
        Ok((
            pre,
            DocumentCache {
                sentences,
                rnn,
                attn,
                head,
            },
        ))
    }

    fn document_backward(&self, cache: &DocumentCache, d_pre: &[f64], grads: &mut Vdan) -> Result<()> {
        let dd = self.doc_head.backward(&cache.head, d_pre, &mut grads.doc_head)?;
        let d_states = self
            .sentence_attention
            .backward(&cache.attn, &dd, &mut grads.sentence_attention)?;
        let (d_ps, _, _) = self
            .document_rnn
            .backward(&cache.rnn, &d_states, &mut grads.document_rnn)?;
        for (sc, dp) in cache.sentences.iter().zip(&d_ps) {
            let d_word_states = self
                .word_attention
                .backward(&sc.attn, dp, &mut grads.word_attention)?;
            let (d_words, _, _) = self
                .sentence_rnn
                .backward(&sc.rnn, &d_word_states, &mut grads.sentence_rnn)?;
            for (&idx, dw) in sc.indices.iter().zip(&d_words) {
                crate::nn::axpy(1.0, dw, grads.vocab.embeddings.row_mut(idx));
            }
        }
        Ok(())
    }

    /// Mean cosine embedding loss over `pairs` and its gradient. In
    /// [`NormMode::Train`] the batch statistics normalize the batch; running
    /// statistics are left untouched (see [`Vdan::update_norm_stats`]).
    pub fn batch_objective(&self, pairs: &[TrainingPair], margin: f64, mode: NormMode) -> Result<BatchOutput> {
        if pairs.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        let mut doc_caches = Vec::with_capacity(pairs.len());
        let mut clip_caches = Vec::with_capacity(pairs.len());
        let mut pre_doc = Vec::with_capacity(pairs.len());
        let mut pre_clip = Vec::with_capacity(pairs.len());
        for p in pairs {
            let (pd, dc) = self.document_forward(&p.document, &p.clip.values)?;
            let (pc, cc) = self.clip_head.forward(&p.clip.values)?;
            pre_doc.push(pd);
            pre_clip.push(pc);
            doc_caches.push(dc);
            clip_caches.push(cc);
        }
        let (bn_doc, doc_bn_cache) = self.doc_norm.forward_batch_frozen(&pre_doc, mode)?;
        let (bn_clip, clip_bn_cache) = self.clip_norm.forward_batch_frozen(&pre_clip, mode)?;

        let n = pairs.len() as f64;
        let mut loss = 0.0;
        let mut cosines = Vec::with_capacity(pairs.len());
        let mut d_bn_doc = Vec::with_capacity(pairs.len());
        let mut d_bn_clip = Vec::with_capacity(pairs.len());
        for ((p, xd), xv) in pairs.iter().zip(&bn_doc).zip(&bn_clip) {
            let (nd, nv) = (norm(xd), norm(xv));
            let ed = l2_normalize(xd)?;
            let ev = l2_normalize(xv)?;
            let cos = dot(&ed, &ev);
            loss += cosine_embedding_loss(cos, p.label, margin)? / n;
            cosines.push(cos);
            let dcos = cosine_embedding_loss_grad(cos, p.label, margin) / n;
            let ded: Vec<f64> = ev.iter().map(|v| dcos * v).collect();
            let dev: Vec<f64> = ed.iter().map(|v| dcos * v).collect();
            d_bn_doc.push(l2_normalize_backward(&ed, nd, &ded));
            d_bn_clip.push(l2_normalize_backward(&ev, nv, &dev));
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("encoder loss".into()));
        }

        let mut grads = self.zeros_like();
        let d_pre_doc = self.doc_norm.backward_batch(&doc_bn_cache, &d_bn_doc, &mut grads.doc_norm)?;
        let d_pre_clip = self
            .clip_norm
            .backward_batch(&clip_bn_cache, &d_bn_clip, &mut grads.clip_norm)?;
        for (dc, dp) in doc_caches.iter().zip(&d_pre_doc) {
            self.document_backward(dc, dp, &mut grads)?;
        }
        for (cc, dp) in clip_caches.iter().zip(&d_pre_clip) {
            self.clip_head.backward(cc, dp, &mut grads.clip_head)?;
        }
        Ok(BatchOutput {
            loss,
            grads,
            cosines,
            pre_doc,
            pre_clip,
        })
    }

    /// Folds the pre-normalization activations of a training batch into the
    /// running statistics.
    pub fn update_norm_stats(&mut self, out: &BatchOutput) {
        self.doc_norm.update_running(&out.pre_doc);
        self.clip_norm.update_running(&out.pre_clip);
    }

    /// Inference-mode loss and cosines for a set of pairs.
    pub fn evaluate(&self, pairs: &[TrainingPair], margin: f64) -> Result<(f64, Vec<f64>)> {
        let mut loss = 0.0;
        let mut cosines = Vec::with_capacity(pairs.len());
        for p in pairs {
            let (ed, ev) = self.embed_pair(&p.document, &p.clip.values)?;
            let cos = dot(&ed, &ev);
            loss += cosine_embedding_loss(cos, p.label, margin)?;
            cosines.push(cos);
        }
        Ok((loss / pairs.len().max(1) as f64, cosines))
    }

    pub fn labels(pairs: &[TrainingPair]) -> Vec<bool> {
        pairs.iter().map(|p| p.label == Label::Positive).collect()
    }

    /// JSON header stored alongside checkpoints.
    pub fn checkpoint_header(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "encoder",
            "config": self.config,
            "vocab": self.vocab.tokens(),
            "frozen_word_vectors": self.vocab.frozen,
        })
    }

    pub fn save(&self, manifest: &std::path::Path) -> Result<()> {
        crate::nn::Checkpoint::from_params(self.checkpoint_header(), self).save(manifest)
    }

    pub fn load(manifest: &std::path::Path) -> Result<Self> {
        let ck = crate::nn::Checkpoint::load(manifest)?;
        let bad = |msg: &str| Error::Schema {
            path: manifest.to_path_buf(),
            msg: msg.to_string(),
        };
        if ck.header["kind"] != "encoder" {
            return Err(bad("not an encoder checkpoint"));
        }
        let config: EncoderConfig =
            serde_json::from_value(ck.header["config"].clone()).map_err(|e| bad(&e.to_string()))?;
        let tokens: Vec<String> =
            serde_json::from_value(ck.header["vocab"].clone()).map_err(|e| bad(&e.to_string()))?;
        let frozen = ck.header["frozen_word_vectors"].as_bool().unwrap_or(false);
        let vocab = Vocabulary::from_parts(
            tokens.clone(),
            Matrix::zeros(tokens.len(), config.word_dim),
            frozen,
        )?;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut model = Vdan::new(config, vocab, &mut rng)?;
        ck.restore_into(&mut model)?;
        Ok(model)
    }
}

impl Parameters for Vdan {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Matrix, TensorRole)) {
        self.vocab.visit(&join(prefix, "vocab"), f);
        self.sentence_rnn.visit(&join(prefix, "sentence_rnn"), f);
        self.word_attention.visit(&join(prefix, "word_attention"), f);
        self.document_rnn.visit(&join(prefix, "document_rnn"), f);
        self.sentence_attention.visit(&join(prefix, "sentence_attention"), f);
        self.doc_head.visit(&join(prefix, "doc_head"), f);
        self.doc_norm.visit(&join(prefix, "doc_norm"), f);
        self.clip_head.visit(&join(prefix, "clip_head"), f);
        self.clip_norm.visit(&join(prefix, "clip_norm"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix, TensorRole)) {
        self.vocab.visit_mut(&join(prefix, "vocab"), f);
        self.sentence_rnn.visit_mut(&join(prefix, "sentence_rnn"), f);
        self.word_attention.visit_mut(&join(prefix, "word_attention"), f);
        self.document_rnn.visit_mut(&join(prefix, "document_rnn"), f);
        self.sentence_attention.visit_mut(&join(prefix, "sentence_attention"), f);
        self.doc_head.visit_mut(&join(prefix, "doc_head"), f);
        self.doc_norm.visit_mut(&join(prefix, "doc_norm"), f);
        self.clip_head.visit_mut(&join(prefix, "clip_head"), f);
        self.clip_norm.visit_mut(&join(prefix, "clip_norm"), f);
    }
}
