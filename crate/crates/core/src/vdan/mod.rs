//! Cross-modal document/clip encoder.

pub mod encoder;
pub mod features;
pub mod loss;
pub mod pairs;
pub mod text;
pub mod train;

pub use encoder::{BatchOutput, DocumentContext, EncoderConfig, Vdan};
pub use features::{read_blob, write_blob, BlobShape, ClipFeatures, FeatureSource};
pub use loss::{alignment, cosine_embedding_loss, embedding_loss, Label};
pub use pairs::{build_pair, Corpus, CorpusClip, TrainingPair};
pub use text::{tokenize, Document, Vocabulary, MAX_SENTENCE_WORDS, OOV_TOKEN};
pub use train::{train_encoder, EncoderTrainConfig, EpochRecord, TrainedEncoder};
