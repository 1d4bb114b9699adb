//! Synthetic topics, caption corpora and videos with planted segments.
//!
//! Each topic owns an orthonormal prototype in feature space and a small
//! set of topic words. A frame of topic `k` has features
//! `contrast * proto_k + noise * xi` with `xi ~ N(0, I / z)`; a clip is the
//! mean of `window` such frames. Captions mix topic words with shared
//! filler words.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::video::{ClipSource, VideoSpec};
use crate::error::{Error, Result};
use crate::nn::{axpy, dot, norm, Matrix};
use crate::vdan::{ClipFeatures, Corpus, CorpusClip, Document, FeatureSource};

const FILLER: [&str; 24] = [
    "the", "a", "then", "and", "with", "into", "some", "now", "next", "it", "of", "to", "on", "in",
    "until", "carefully", "slowly", "is", "this", "we", "from", "over", "onto", "again",
];
const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    /// Seed of the topic library (prototypes and words).
    pub world_seed: u64,
    pub num_topics: usize,
    pub words_per_topic: usize,
    pub feature_dim: usize,
    /// Frames averaged into one clip feature.
    pub window: usize,
    /// Prototype scale; in-segment minus out-of-segment expected latent
    /// alignment.
    pub contrast: f64,
    /// Per-frame noise norm.
    pub noise: f64,
    pub caption_words: (usize, usize),
    /// Probability that a caption word is a topic word.
    pub topic_word_prob: f64,
    pub captions_per_clip: usize,
    pub corpus_clips: usize,
    pub frames: (usize, usize),
    pub segments: usize,
    /// Segment length as a fraction of the video length.
    pub segment_fraction: (f64, f64),
    /// Length range of background topic blocks.
    pub background_block: (usize, usize),
    /// Document captions per planted segment.
    pub captions_per_segment: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            world_seed: 0,
            num_topics: 32,
            words_per_topic: 10,
            feature_dim: 64,
            window: 32,
            contrast: 1.0,
            noise: 2.0,
            caption_words: (6, 12),
            topic_word_prob: 0.5,
            captions_per_clip: 3,
            corpus_clips: 240,
            frames: (800, 1600),
            segments: 3,
            segment_fraction: (0.08, 0.14),
            background_block: (40, 160),
            captions_per_segment: 2,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_topics < self.segments + 1 || self.num_topics < 3 {
            return fail("num_topics must exceed the segment count and be at least 3");
        }
        if self.num_topics > self.feature_dim {
            return fail("num_topics cannot exceed feature_dim (prototypes are orthonormal)");
        }
        if self.words_per_topic == 0 || self.window == 0 || self.captions_per_clip == 0 {
            return fail("words_per_topic, window and captions_per_clip must be positive");
        }
        if !(self.contrast > 0.0) || !(self.noise >= 0.0) {
            return fail("contrast must be positive and noise non-negative");
        }
        if self.caption_words.0 == 0 || self.caption_words.0 > self.caption_words.1 {
            return fail("caption_words must be a non-empty range");
        }
        if !(0.0..=1.0).contains(&self.topic_word_prob) {
            return fail("topic_word_prob must be in [0, 1]");
        }
        if self.frames.0 == 0 || self.frames.0 > self.frames.1 {
            return fail("frames must be a non-empty range");
        }
        let (lo, hi) = self.segment_fraction;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return fail("segment_fraction must satisfy 0 < lo <= hi < 1");
        }
        if self.background_block.0 == 0 || self.background_block.0 > self.background_block.1 {
            return fail("background_block must be a non-empty range");
        }
        if self.segments > 0 && self.captions_per_segment == 0 {
            return fail("captions_per_segment must be positive");
        }
        Ok(())
    }
}

/// Topic library shared by the caption corpus and the videos.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub config: SyntheticConfig,
    /// `num_topics x feature_dim`, orthonormal rows.
    pub prototypes: Matrix,
    pub topic_words: Vec<Vec<String>>,
}

/// A generated video with its per-frame topic labels.
#[derive(Debug, Clone)]
pub struct SyntheticVideo {
    pub spec: VideoSpec,
    pub frame_topics: Vec<usize>,
    pub document_topics: Vec<usize>,
}

impl SyntheticWorld {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.world_seed);
        let (k, z) = (config.num_topics, config.feature_dim);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
        while rows.len() < k {
            let mut v: Vec<f64> = (0..z).map(|_| StandardNormal.sample(&mut rng)).collect();
            for r in &rows {
                let c = dot(&v, r);
                axpy(-c, r, &mut v);
            }
            let n = norm(&v);
            if n > 1e-6 {
                rows.push(v.iter().map(|x| x / n).collect());
            }
        }
        let prototypes = Matrix::from_vec(k, z, rows.concat())?;

        let mut used = std::collections::HashSet::new();
        let mut topic_words = Vec::with_capacity(k);
        for _ in 0..k {
            let mut words = Vec::with_capacity(config.words_per_topic);
            while words.len() < config.words_per_topic {
                let syllables = rng.random_range(2..=3);
                let w: String = (0..syllables)
                    .map(|_| format!("{}{}", ONSETS.choose(&mut rng).unwrap(), VOWELS.choose(&mut rng).unwrap()))
                    .collect();
                if used.insert(w.clone()) {
                    words.push(w);
                }
            }
            topic_words.push(words);
        }
        Ok(Self {
            config,
            prototypes,
            topic_words,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    pub fn num_topics(&self) -> usize {
        self.config.num_topics
    }

    /// One noisy frame of `topic`.
    pub fn frame_feature<R: Rng + ?Sized>(&self, topic: usize, rng: &mut R) -> Vec<f64> {
        let z = self.feature_dim();
        let scale = self.config.noise / (z as f64).sqrt();
        let proto = self.prototypes.row(topic);
        (0..z)
            .map(|i| {
                let n: f64 = StandardNormal.sample(rng);
                self.config.contrast * proto[i] + scale * n
            })
            .collect()
    }

    /// Mean of `window` frames of `topic`.
    pub fn clip_feature<R: Rng + ?Sized>(&self, topic: usize, rng: &mut R) -> Vec<f64> {
        let mut acc = vec![0.0; self.feature_dim()];
        let w = self.config.window;
        for _ in 0..w {
            axpy(1.0 / w as f64, &self.frame_feature(topic, rng), &mut acc);
        }
        acc
    }

    pub fn caption<R: Rng + ?Sized>(&self, topic: usize, rng: &mut R) -> String {
        let (lo, hi) = self.config.caption_words;
        let n = rng.random_range(lo..=hi);
        let mut words: Vec<&str> = Vec::with_capacity(n);
        // at least one topic word so every caption carries its topic
        words.push(self.topic_words[topic].choose(rng).unwrap());
        for _ in 1..n {
            if rng.random_bool(self.config.topic_word_prob) {
                words.push(self.topic_words[topic].choose(rng).unwrap());
            } else {
                words.push(FILLER.choose(rng).unwrap());
            }
        }
        words.shuffle(rng);
        words.join(" ")
    }

    /// Every token the generator can emit.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = FILLER.iter().map(|s| s.to_string()).collect();
        for t in &self.topic_words {
            v.extend(t.iter().cloned());
        }
        v
    }

    /// Caption corpus of `clips` clips with uniformly drawn topics.
    pub fn corpus<R: Rng + ?Sized>(&self, clips: usize, rng: &mut R) -> Result<Corpus> {
        let mut out = Vec::with_capacity(clips);
        for i in 0..clips {
            let topic = rng.random_range(0..self.num_topics());
            let features = ClipFeatures::new(self.clip_feature(topic, rng), FeatureSource::Synthetic)?;
            let captions = (0..self.config.captions_per_clip).map(|_| self.caption(topic, rng)).collect();
            out.push(CorpusClip {
                id: format!("clip{i:05}"),
                features,
                captions,
            });
        }
        Ok(Corpus { clips: out })
    }

    /// Latent alignment of clip features with a set of document topics:
    /// the largest projection onto any of their prototypes.
    pub fn oracle_alignment(&self, features: &[f64], topics: &[usize]) -> f64 {
        topics
            .iter()
            .map(|&t| dot(features, self.prototypes.row(t)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lays out planted segments in `[1, F]`: sorted, disjoint, not
    /// touching.
    pub fn layout_segments<R: Rng + ?Sized>(&self, num_frames: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
        let c = &self.config;
        let lengths: Vec<usize> = (0..c.segments)
            .map(|_| {
                let f = rng.random_range(c.segment_fraction.0..=c.segment_fraction.1);
                ((f * num_frames as f64).round() as usize).max(1)
            })
            .collect();
        segments_from_lengths(num_frames, &lengths, rng)
    }

    /// One video with `num_frames` frames and the configured segments.
    pub fn video<R: Rng + ?Sized>(&self, id: &str, num_frames: usize, rng: &mut R) -> Result<SyntheticVideo> {
        let segments = self.layout_segments(num_frames, rng)?;
        self.video_with_segments(id, num_frames, segments, rng)
    }

    pub fn video_with_segments<R: Rng + ?Sized>(
        &self,
        id: &str,
        num_frames: usize,
        segments: Vec<(usize, usize)>,
        rng: &mut R,
    ) -> Result<SyntheticVideo> {
        let c = &self.config;
        let mut topics: Vec<usize> = (0..c.num_topics).collect();
        topics.shuffle(rng);
        let (document_topics, background) = topics.split_at(segments.len());
        let document_topics = document_topics.to_vec();
        if background.is_empty() {
            return Err(Error::Config("no topics left for the background".into()));
        }

        let mut frame_topics = vec![usize::MAX; num_frames];
        for (&(s, e), &t) in segments.iter().zip(&document_topics) {
            frame_topics[s - 1..e].fill(t);
        }
        let mut f = 0;
        while f < num_frames {
            if frame_topics[f] != usize::MAX {
                f += 1;
                continue;
            }
            let len = rng.random_range(c.background_block.0..=c.background_block.1);
            let topic = *background.choose(rng).unwrap();
            let mut n = 0;
            while f < num_frames && n < len && frame_topics[f] == usize::MAX {
                frame_topics[f] = topic;
                f += 1;
                n += 1;
            }
        }

        let z = self.feature_dim();
        let mut data = Vec::with_capacity(num_frames * z);
        for &t in &frame_topics {
            // stored as f32 on disk; keep the in-memory copy identical
            data.extend(self.frame_feature(t, rng).into_iter().map(|v| v as f32 as f64));
        }
        let frames = Matrix::from_vec(num_frames, z, data)?;

        let mut sentences = Vec::new();
        for &t in &document_topics {
            for _ in 0..c.captions_per_segment {
                sentences.push(self.caption(t, rng));
            }
        }
        if sentences.is_empty() {
            sentences.push(self.caption(background[0], rng));
        }
        let document = Document::from_sentences(&sentences, crate::vdan::MAX_SENTENCE_WORDS)?;
        let spec = VideoSpec::new(
            id.to_string(),
            ClipSource::WindowPooled {
                frames,
                window: c.window,
            },
            segments,
            document,
        )?;
        Ok(SyntheticVideo {
            spec,
            frame_topics,
            document_topics,
        })
    }

    /// `count` videos with lengths drawn from the configured range.
    pub fn videos(&self, count: usize, seed: u64, prefix: &str) -> Result<Vec<SyntheticVideo>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let f = rng.random_range(self.config.frames.0..=self.config.frames.1);
                self.video(&format!("{prefix}{i:04}"), f, &mut rng)
            })
            .collect()
    }
}

/// Places segments of the given lengths in random order with at least one
/// free frame between neighbours.
pub fn segments_from_lengths<R: Rng + ?Sized>(
    num_frames: usize,
    lengths: &[usize],
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let used: usize = lengths.iter().sum::<usize>() + lengths.len().saturating_sub(1);
    if lengths.contains(&0) || used > num_frames {
        return Err(Error::Config(format!(
            "segments of lengths {lengths:?} do not fit in {num_frames} frames"
        )));
    }
    let free = num_frames - used;
    // split the free frames into len + 1 gaps
    let mut cuts: Vec<usize> = (0..lengths.len()).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(lengths.len());
    let mut pos = 1;
    let mut prev = 0;
    for (i, (&cut, &len)) in cuts.iter().zip(lengths).enumerate() {
        pos += cut - prev + usize::from(i > 0);
        prev = cut;
        out.push((pos, pos + len - 1));
        pos += len;
    }
    Ok(out)
}
