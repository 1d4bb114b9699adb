//! Minimal neural substrate: dense layers, gated recurrent cells,
//! attention pooling, normalization, Adam, finite-difference gradient
//! checks and a checkpoint format. Everything runs in `f64`; checkpoints
//! store `f32`.

mod adam;
mod attention;
pub mod checkpoint;
mod dense;
pub mod gradcheck;
mod gru;
mod matrix;
mod norm;
pub mod params;

pub use adam::{Adam, AdamConfig};
pub use attention::{AttentionCache, AttentionPool};
pub use checkpoint::{quantize_to_f32, Checkpoint};
pub use dense::{Activation, Dense, DenseCache, Mlp, MlpCache};
pub use gradcheck::{check_gradients, check_input_gradient, GradCheckConfig, GradCheckReport};
pub use gru::{BiGru, BiGruCache, GruCell, GruSeqCache};
pub use matrix::{axpy, concat, dot, norm, softmax, softmax_backward, Matrix};
pub(crate) use matrix::sigmoid;
pub use norm::{l2_normalize, l2_normalize_backward, BatchNorm, BatchNormCache, NormMode};
pub use params::{clip_global_norm, Parameters, TensorRole};
