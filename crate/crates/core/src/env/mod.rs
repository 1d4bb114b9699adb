//! Video navigation environment: clip features, rollouts, rewards and the
//! synthetic data generator.

pub mod rollout;
pub mod synth;
pub mod video;

pub use rollout::{
    average_skip, entropy, reward, rollout, ConstantPolicy, EpisodeTrace, FrameEmbedding, Policy, RolloutConfig,
    VideoEmbeddings,
};
pub use synth::{segments_from_lengths, SyntheticConfig, SyntheticVideo, SyntheticWorld};
pub use video::{validate_segments, ClipSource, Dataset, Pooling, VideoSpec, CLIP_WINDOW};
