//! Text-driven semantic fast-forwarding.
//!
//! A cross-modal encoder ([`vdan`]) maps an instruction document and a
//! short video clip into a shared unit-norm embedding space. A skip-aware
//! agent ([`agent`]) walks through a video, observing those embeddings, its
//! position and its running speed-up, and adjusts how many frames it skips
//! so that relevant segments play slowly while the overall speed-up stays
//! on target. [`rl`] trains the agent with REINFORCE, [`env`] provides the
//! navigation environment and synthetic data, and [`eval`] the metrics.

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rl;
pub mod vdan;

pub use error::{Error, Result};
